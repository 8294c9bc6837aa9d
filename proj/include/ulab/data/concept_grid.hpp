#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ulab/tensor/tensor.hpp"

namespace ulab {

using ConceptId = std::size_t;
using ClassId = std::size_t;

/// Slot-map marker for a grid slot holding no concept.
inline constexpr int kEmptySlot = -1;

/// K distinct P x P gray-value patterns, one per concept.
struct ConceptLibrary {
    std::size_t patch_size = 0;
    std::uint64_t seed = 0;
    std::vector<Tensor> patterns;
    std::vector<std::string> names;

    std::size_t size() const noexcept { return patterns.size(); }
    const Tensor& pattern(ConceptId id) const { return patterns.at(id); }
};

ConceptLibrary gen_concept_library(std::size_t num_concepts, std::size_t patch_size, std::uint64_t seed);

/// Requested cross-class confusion: `concept` becomes a secondary of
/// `target` while also belonging to `owner`. When `concept` is empty the
/// owner's primary concept is shared.
struct ConfusionPair {
    ClassId target = 0;
    ClassId owner = 0;
    std::optional<ConceptId> concept_id;
};

struct ConfusionLink {
    ClassId other = 0;
    ConceptId shared = 0;
};

struct ClassSignature {
    ClassId id = 0;
    ConceptId primary = 0;
    std::vector<ConceptId> secondaries;
    std::optional<ConfusionLink> confusion_partner;

    bool has_concept(ConceptId c) const;
};

std::vector<ClassSignature> gen_class_signatures(std::size_t num_classes, const ConceptLibrary& library,
                                                 std::span<const ConfusionPair> confusion_pairs,
                                                 std::size_t secondaries_per_class, std::uint64_t seed);

/// Class whose primary concept is `concept`, if any.
std::optional<ClassId> concept_owner(std::span<const ClassSignature> signatures, ConceptId concept_id);

struct RenderSettings {
    std::size_t grid = 3;
    double noise = 0.05;
    double secondary_inclusion = 0.5;
    // inclusion probability of a concept shared through a confusion pair
    double confusion_inclusion = 0.8;
};

struct GridSample {
    Tensor image;                        // [G*P, G*P]
    std::vector<std::uint8_t> concepts;  // length K, binary
    ClassId label = 0;
    std::vector<int> slot_map;           // length G*G, concept id or kEmptySlot
    std::uint64_t noise_seed = 0;
};

GridSample render_sample(const ClassSignature& signature, const ConceptLibrary& library,
                         const RenderSettings& settings, std::uint64_t sample_seed);

/// Pixel rectangle of slot `slot` in a (G*P)x(G*P) image, as row/col offsets.
struct SlotRect {
    std::size_t row0 = 0;
    std::size_t col0 = 0;
    std::size_t size = 0;
};
SlotRect slot_rect(std::size_t slot, std::size_t grid, std::size_t patch_size);

/// Overwrites slot pixels with `patch` (P x P) or zeros when `patch` is null.
void write_slot(Tensor& image, const SlotRect& rect, const Tensor* patch);
std::vector<double> read_slot(const Tensor& image, const SlotRect& rect);

}  // namespace ulab
