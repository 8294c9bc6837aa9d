#include "ulab/data/concept_grid.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "ulab/seed.hpp"

namespace ulab {

namespace {

constexpr std::array<const char*, 24> kConceptNames = {
    "antlers", "propellers", "wheels", "wings",  "fur",    "scales", "stripes", "spots",
    "horns",   "feathers",   "fins",   "whiskers", "hooves", "sails", "beak",    "tail",
    "mane",    "shell",      "rotor",  "hull",   "paws",   "gills",  "windows", "chimney",
};

double pattern_distance(const Tensor& a, const Tensor& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

}  // namespace

ConceptLibrary gen_concept_library(std::size_t num_concepts, std::size_t patch_size, std::uint64_t seed) {
    if (num_concepts < 4) throw std::invalid_argument("concept library: K must be at least 4");
    if (patch_size < 4) throw std::invalid_argument("concept library: patch size P must be at least 4");

    ConceptLibrary lib;
    lib.patch_size = patch_size;
    lib.seed = seed;
    const double min_distance = 0.1 * static_cast<double>(patch_size * patch_size);
    constexpr std::uint64_t kMaxAttempts = 10000;

    for (ConceptId c = 0; c < num_concepts; ++c) {
        bool placed = false;
        for (std::uint64_t attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
            std::mt19937_64 rng(derive_seed(seed, {c, attempt}));
            std::bernoulli_distribution on(0.5);
            Tensor p(Shape{patch_size, patch_size});
            for (auto& v : p.data()) v = on(rng) ? 1.0 : 0.0;
            const bool distinct = std::all_of(lib.patterns.begin(), lib.patterns.end(),
                                              [&](const Tensor& q) { return pattern_distance(p, q) > min_distance; });
            if (distinct) {
                lib.patterns.push_back(std::move(p));
                placed = true;
            }
        }
        if (!placed) throw std::runtime_error("concept library: could not place pattern " + std::to_string(c));
        lib.names.push_back(c < kConceptNames.size() ? kConceptNames[c] : "concept" + std::to_string(c));
    }
    return lib;
}

bool ClassSignature::has_concept(ConceptId c) const {
    return primary == c || std::find(secondaries.begin(), secondaries.end(), c) != secondaries.end();
}

std::vector<ClassSignature> gen_class_signatures(std::size_t num_classes, const ConceptLibrary& library,
                                                 std::span<const ConfusionPair> confusion_pairs,
                                                 std::size_t secondaries_per_class, std::uint64_t seed) {
    const std::size_t k = library.size();
    if (num_classes < 2) throw std::invalid_argument("class signatures: need at least two classes");
    if (num_classes > k) {
        throw std::invalid_argument("class signatures: N_c = " + std::to_string(num_classes) +
                                    " exceeds concept count K = " + std::to_string(k));
    }

    std::vector<ConceptId> order(k);
    std::iota(order.begin(), order.end(), ConceptId{0});
    std::mt19937_64 rng(derive_seed(seed, {0x5167}));
    std::shuffle(order.begin(), order.end(), rng);

    // Secondaries are dealt from a shuffled non-primary pool so that classes
    // get disjoint sets whenever the pool is large enough.
    std::vector<ConceptId> pool(order.begin() + static_cast<std::ptrdiff_t>(num_classes), order.end());
    std::vector<ClassSignature> sigs(num_classes);
    for (ClassId c = 0; c < num_classes; ++c) {
        sigs[c].id = c;
        sigs[c].primary = order[c];
        if (pool.empty()) continue;
        const std::size_t take = std::min(secondaries_per_class, pool.size());
        for (std::size_t t = 0; t < take; ++t) {
            sigs[c].secondaries.push_back(pool[(c * secondaries_per_class + t) % pool.size()]);
        }
        std::sort(sigs[c].secondaries.begin(), sigs[c].secondaries.end());
        sigs[c].secondaries.erase(std::unique(sigs[c].secondaries.begin(), sigs[c].secondaries.end()),
                                  sigs[c].secondaries.end());
    }

    for (const auto& pair : confusion_pairs) {
        if (pair.target >= num_classes || pair.owner >= num_classes) {
            throw std::invalid_argument("confusion pair references an unknown class");
        }
        if (pair.target == pair.owner) throw std::invalid_argument("confusion pair needs two distinct classes");
        const ConceptId shared = pair.concept_id.value_or(sigs[pair.owner].primary);
        if (shared >= k) throw std::invalid_argument("confusion pair references an unknown concept");
        auto& target = sigs[pair.target];
        if (shared == target.primary) throw std::invalid_argument("confusion concept cannot be the target's primary");
        if (!target.has_concept(shared)) target.secondaries.push_back(shared);
        auto& owner = sigs[pair.owner];
        if (!owner.has_concept(shared)) owner.secondaries.push_back(shared);
        target.confusion_partner = ConfusionLink{pair.owner, shared};
    }
    return sigs;
}

std::optional<ClassId> concept_owner(std::span<const ClassSignature> signatures, ConceptId concept_id) {
    for (const auto& s : signatures) {
        if (s.primary == concept_id) return s.id;
    }
    return std::nullopt;
}

SlotRect slot_rect(std::size_t slot, std::size_t grid, std::size_t patch_size) {
    return SlotRect{(slot / grid) * patch_size, (slot % grid) * patch_size, patch_size};
}

void write_slot(Tensor& image, const SlotRect& rect, const Tensor* patch) {
    for (std::size_t r = 0; r < rect.size; ++r) {
        for (std::size_t c = 0; c < rect.size; ++c) {
            image.at(rect.row0 + r, rect.col0 + c) = patch ? patch->at(r, c) : 0.0;
        }
    }
}

std::vector<double> read_slot(const Tensor& image, const SlotRect& rect) {
    std::vector<double> out;
    out.reserve(rect.size * rect.size);
    for (std::size_t r = 0; r < rect.size; ++r) {
        for (std::size_t c = 0; c < rect.size; ++c) out.push_back(image.at(rect.row0 + r, rect.col0 + c));
    }
    return out;
}

GridSample render_sample(const ClassSignature& signature, const ConceptLibrary& library,
                         const RenderSettings& settings, std::uint64_t sample_seed) {
    const std::size_t g = settings.grid;
    const std::size_t p = library.patch_size;
    const std::size_t slots = g * g;
    if (g == 0 || slots < 1 + signature.secondaries.size()) {
        throw std::invalid_argument("render_sample: grid of " + std::to_string(slots) + " slots cannot hold " +
                                    std::to_string(1 + signature.secondaries.size()) + " concepts");
    }
    if (settings.noise < 0.0) throw std::invalid_argument("render_sample: noise must be non-negative");

    std::mt19937_64 rng(sample_seed);
    std::vector<std::size_t> slot_order(slots);
    std::iota(slot_order.begin(), slot_order.end(), std::size_t{0});
    std::shuffle(slot_order.begin(), slot_order.end(), rng);

    GridSample s;
    s.label = signature.id;
    s.noise_seed = sample_seed;
    s.image = Tensor(Shape{g * p, g * p});
    s.concepts.assign(library.size(), 0);
    s.slot_map.assign(slots, kEmptySlot);

    std::size_t next = 0;
    const auto place = [&](ConceptId c) {
        const std::size_t slot = slot_order[next++];
        s.slot_map[slot] = static_cast<int>(c);
        s.concepts[c] = 1;
        write_slot(s.image, slot_rect(slot, g, p), &library.pattern(c));
    };

    place(signature.primary);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (ConceptId c : signature.secondaries) {
        const bool shared = signature.confusion_partner && signature.confusion_partner->shared == c;
        const double prob = shared ? settings.confusion_inclusion : settings.secondary_inclusion;
        if (unit(rng) < prob) place(c);
    }

    if (settings.noise > 0.0) {
        std::normal_distribution<double> noise(0.0, settings.noise);
        for (auto& v : s.image.data()) v = std::clamp(v + noise(rng), 0.0, 1.0);
    }
    return s;
}

}  // namespace ulab
