#include "ulab/poison/image_poison.hpp"

#include <cmath>
#include <stdexcept>

namespace ulab {

namespace {

std::size_t grid_of(const GridSample& s) {
    const auto g = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(s.slot_map.size()))));
    if (g * g != s.slot_map.size() || g == 0) throw std::invalid_argument("sample slot map is not a square grid");
    return g;
}

}  // namespace

std::string to_string(MaskMode mode) {
    switch (mode) {
        case MaskMode::None: return "none";
        case MaskMode::Full: return "full";
        case MaskMode::ConceptGuided: return "concept";
    }
    return "?";
}

std::string to_string(LabelStrategy strategy) {
    return strategy == LabelStrategy::Targeted ? "targeted" : "random";
}

MaskMode mask_mode_from_string(const std::string& text) {
    if (text == "none") return MaskMode::None;
    if (text == "full") return MaskMode::Full;
    if (text == "concept") return MaskMode::ConceptGuided;
    throw std::invalid_argument("mask mode: expected none, full or concept, got '" + text + "'");
}

LabelStrategy label_strategy_from_string(const std::string& text) {
    if (text == "targeted") return LabelStrategy::Targeted;
    if (text == "random") return LabelStrategy::Random;
    throw std::invalid_argument("label strategy: expected targeted or random, got '" + text + "'");
}

void PoisonPlan::validate(std::size_t num_classes) const {
    if (num_classes < 2) throw std::invalid_argument("poison plan: need at least two classes");
    if (target_class >= num_classes) throw std::invalid_argument("poison plan: target class out of range");
    if (mask == MaskMode::ConceptGuided && (!confusing_concept || !owner_class)) {
        throw std::invalid_argument("poison plan: concept-guided masking needs a detected confusion triple");
    }
    if (labels == LabelStrategy::Targeted) {
        if (!owner_class) throw std::invalid_argument("poison plan: targeted labels need an owner class");
        if (*owner_class == target_class) throw std::invalid_argument("poison plan: owner class equals target class");
    }
    if (owner_class && *owner_class >= num_classes) throw std::invalid_argument("poison plan: owner class out of range");
}

PoisonedImage poison_image(const GridSample& sample, const PoisonPlan& plan, const ConceptLibrary& library,
                           ClassId new_label) {
    if (sample.label != plan.target_class) {
        throw std::invalid_argument("poison_image: sample label " + std::to_string(sample.label) +
                                    " is not the target class " + std::to_string(plan.target_class));
    }
    if (new_label == plan.target_class) throw std::invalid_argument("poison_image: new label equals target class");

    const std::size_t g = grid_of(sample);
    PoisonedImage out{sample, Provenance{0, sample.label, new_label, {}}};
    GridSample& s = out.sample;

    const auto overwrite = [&](std::size_t slot, const Tensor* patch, int new_concept) {
        const SlotRect rect = slot_rect(slot, g, library.patch_size);
        out.provenance.masked.push_back(SlotPatch{slot, s.slot_map[slot], read_slot(s.image, rect)});
        write_slot(s.image, rect, patch);
        s.slot_map[slot] = new_concept;
    };

    switch (plan.mask) {
        case MaskMode::None:
            break;
        case MaskMode::Full:
            for (std::size_t slot = 0; slot < s.slot_map.size(); ++slot) {
                if (s.slot_map[slot] != kEmptySlot) overwrite(slot, nullptr, kEmptySlot);
            }
            break;
        case MaskMode::ConceptGuided: {
            if (!plan.confusing_concept) throw std::invalid_argument("poison_image: missing confusing concept");
            const ConceptId j = *plan.confusing_concept;
            bool found = false;
            for (std::size_t slot = 0; slot < s.slot_map.size(); ++slot) {
                if (s.slot_map[slot] == static_cast<int>(plan.target_primary)) {
                    overwrite(slot, &library.pattern(j), static_cast<int>(j));
                    found = true;
                }
            }
            if (!found) {
                throw std::invalid_argument("poison_image: target primary concept " +
                                            std::to_string(plan.target_primary) + " absent from sample");
            }
            break;
        }
    }

    std::fill(s.concepts.begin(), s.concepts.end(), std::uint8_t{0});
    for (int c : s.slot_map) {
        if (c != kEmptySlot) s.concepts[static_cast<std::size_t>(c)] = 1;
    }
    s.label = new_label;
    return out;
}

GridSample restore_original(const GridSample& poisoned, const Provenance& provenance) {
    GridSample s = poisoned;
    const std::size_t g = grid_of(s);
    const std::size_t side = s.image.dim(0) / g;
    // undo in reverse order so repeated slots end at their earliest content
    for (auto it = provenance.masked.rbegin(); it != provenance.masked.rend(); ++it) {
        const SlotRect rect = slot_rect(it->slot, g, side);
        Tensor patch(Shape{side, side}, it->original_pixels);
        write_slot(s.image, rect, &patch);
        s.slot_map[it->slot] = it->original_concept;
    }
    std::fill(s.concepts.begin(), s.concepts.end(), std::uint8_t{0});
    for (int c : s.slot_map) {
        if (c != kEmptySlot) s.concepts[static_cast<std::size_t>(c)] = 1;
    }
    s.label = provenance.original_label;
    return s;
}

ClassId assign_poison_label(const PoisonPlan& plan, std::size_t num_classes, std::mt19937_64& rng) {
    if (num_classes < 2) throw std::invalid_argument("assign_poison_label: need at least two classes");
    if (plan.labels == LabelStrategy::Targeted) {
        if (!plan.owner_class) throw std::invalid_argument("assign_poison_label: targeted labels need an owner class");
        return *plan.owner_class;
    }
    std::uniform_int_distribution<std::size_t> pick(0, num_classes - 2);
    const std::size_t r = pick(rng);
    return r >= plan.target_class ? r + 1 : r;
}

std::vector<GridSample> PoisonedDataset::combined() const {
    std::vector<GridSample> out = retain;
    out.insert(out.end(), malicious.begin(), malicious.end());
    return out;
}

PoisonedDataset build_poisoned_dataset(const Dataset& dataset, const PoisonPlan& plan) {
    plan.validate(dataset.num_classes());
    std::vector<std::size_t> totals(dataset.num_classes(), 0);
    for (const auto& s : dataset.train) ++totals[s.label];
    if (totals[plan.target_class] == 0) throw std::invalid_argument("build_poisoned_dataset: target class has no train samples");

    // Half keeps the first ceil(n/2) samples per class; a dataset that is
    // already Half is taken as is.
    const bool halve = plan.integrity == Integrity::Half && dataset.spec.integrity == Integrity::Full;
    std::vector<std::size_t> taken(dataset.num_classes(), 0);

    PoisonedDataset out;
    out.plan = plan;
    std::mt19937_64 rng(plan.seed);
    for (std::size_t i = 0; i < dataset.train.size(); ++i) {
        const GridSample& s = dataset.train[i];
        if (halve && taken[s.label] >= (totals[s.label] + 1) / 2) continue;
        ++taken[s.label];
        if (s.label != plan.target_class) {
            out.retain.push_back(s);
            continue;
        }
        const ClassId label = assign_poison_label(plan, dataset.num_classes(), rng);
        PoisonedImage p = poison_image(s, plan, dataset.library, label);
        p.provenance.original_index = i;
        out.malicious.push_back(std::move(p.sample));
        out.provenance.push_back(std::move(p.provenance));
    }
    return out;
}

}  // namespace ulab
