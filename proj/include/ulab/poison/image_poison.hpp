#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ulab/data/dataset.hpp"

namespace ulab {

enum class MaskMode { None, Full, ConceptGuided };
enum class LabelStrategy { Targeted, Random };

std::string to_string(MaskMode mode);
std::string to_string(LabelStrategy strategy);
MaskMode mask_mode_from_string(const std::string& text);
LabelStrategy label_strategy_from_string(const std::string& text);

struct PoisonPlan {
    ClassId target_class = 0;
    ConceptId target_primary = 0;
    MaskMode mask = MaskMode::ConceptGuided;
    LabelStrategy labels = LabelStrategy::Random;
    Integrity integrity = Integrity::Full;
    // Confusing concept j and its owner class k from concept inference.
    std::optional<ConceptId> confusing_concept;
    std::optional<ClassId> owner_class;
    std::uint64_t seed = 11;

    void validate(std::size_t num_classes) const;
};

/// Original content of one overwritten grid slot.
struct SlotPatch {
    std::size_t slot = 0;
    int original_concept = kEmptySlot;
    std::vector<double> original_pixels;
};

struct Provenance {
    std::size_t original_index = 0;  // index into the source train list
    ClassId original_label = 0;
    ClassId new_label = 0;
    std::vector<SlotPatch> masked;
};

struct PoisonedImage {
    GridSample sample;
    Provenance provenance;
};

/// Applies the plan's mask to one target-class sample and relabels it.
PoisonedImage poison_image(const GridSample& sample, const PoisonPlan& plan, const ConceptLibrary& library,
                           ClassId new_label);

/// Inverts `poison_image` using the recorded slot contents.
GridSample restore_original(const GridSample& poisoned, const Provenance& provenance);

ClassId assign_poison_label(const PoisonPlan& plan, std::size_t num_classes, std::mt19937_64& rng);

struct PoisonedDataset {
    PoisonPlan plan;
    std::vector<GridSample> retain;
    std::vector<GridSample> malicious;
    std::vector<Provenance> provenance;  // parallel to `malicious`

    std::size_t size() const noexcept { return retain.size() + malicious.size(); }
    std::vector<GridSample> combined() const;
};

PoisonedDataset build_poisoned_dataset(const Dataset& dataset, const PoisonPlan& plan);

}  // namespace ulab
