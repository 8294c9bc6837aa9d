#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ulab/data/concept_grid.hpp"

namespace ulab {

enum class Integrity { Full, Half };

std::string to_string(Integrity integrity);
Integrity integrity_from_string(const std::string& text);

struct DatasetSpec {
    std::size_t num_classes = 8;
    std::size_t num_concepts = 24;
    std::size_t grid = 3;
    std::size_t patch_size = 6;
    std::size_t train_per_class = 500;
    std::size_t test_per_class = 100;
    double noise = 0.05;
    double secondary_inclusion = 0.7;
    double confusion_inclusion = 0.8;
    std::size_t secondaries_per_class = 2;
    std::vector<ConfusionPair> confusion_pairs{ConfusionPair{3, 0, std::nullopt}};
    Integrity integrity = Integrity::Full;
    std::uint64_t seed = 2024;

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;
    RenderSettings render_settings() const;
    std::size_t image_side() const { return grid * patch_size; }
    std::size_t input_width() const { return image_side() * image_side(); }
};

struct Dataset {
    DatasetSpec spec;
    ConceptLibrary library;
    std::vector<ClassSignature> signatures;
    std::vector<GridSample> train;  // class-major, sample index order within each class
    std::vector<GridSample> test;

    std::size_t num_classes() const { return spec.num_classes; }
};

Dataset gen_dataset(const DatasetSpec& spec);
/// Library and class signatures of `spec` without any samples.
Dataset dataset_skeleton(const DatasetSpec& spec);

/// Fresh samples of one class from an independent seed stream; never equal
/// to train or test samples of the same dataset.
std::vector<GridSample> gen_extra_samples(const Dataset& dataset, ClassId cls, std::size_t count,
                                          std::uint64_t stream);

/// First ceil(n_c / 2) samples of every class, by order of appearance.
std::vector<GridSample> half_per_class(std::span<const GridSample> samples, std::size_t num_classes);

/// Seed of sample `index` of class `cls` in split stream `split` (0 train, 1 test).
std::uint64_t sample_seed(std::uint64_t dataset_seed, std::uint64_t split, ClassId cls, std::size_t index);

}  // namespace ulab
