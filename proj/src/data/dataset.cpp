#include "ulab/data/dataset.hpp"

#include <stdexcept>

#include "ulab/seed.hpp"

namespace ulab {

std::string to_string(Integrity integrity) { return integrity == Integrity::Full ? "Full" : "Half"; }

Integrity integrity_from_string(const std::string& text) {
    if (text == "Full" || text == "full") return Integrity::Full;
    if (text == "Half" || text == "half") return Integrity::Half;
    throw std::invalid_argument("integrity: expected Full or Half, got '" + text + "'");
}

void DatasetSpec::validate() const {
    const auto fail = [](const std::string& field, const std::string& why) {
        throw std::invalid_argument("dataset spec field '" + field + "': " + why);
    };
    if (num_classes < 2) fail("num_classes", "need at least two classes");
    if (num_concepts < 4) fail("num_concepts", "need at least four concepts");
    if (num_classes > num_concepts) fail("num_classes", "exceeds num_concepts");
    if (patch_size < 4) fail("patch_size", "must be at least 4");
    if (grid == 0) fail("grid", "must be positive");
    if (train_per_class == 0) fail("train_per_class", "must be positive");
    if (test_per_class == 0) fail("test_per_class", "must be positive");
    if (noise < 0.0) fail("noise", "must be non-negative");
    if (secondary_inclusion < 0.0 || secondary_inclusion > 1.0) fail("secondary_inclusion", "must lie in [0,1]");
    if (confusion_inclusion < 0.0 || confusion_inclusion > 1.0) fail("confusion_inclusion", "must lie in [0,1]");
    if (secondaries_per_class > num_concepts - num_classes) {
        fail("secondaries_per_class", "larger than the non-primary concept pool");
    }
    const std::size_t max_concepts_per_sample = 1 + secondaries_per_class + 2 * confusion_pairs.size();
    if (grid * grid < max_concepts_per_sample) fail("grid", "too small for the configured concepts");
    for (const auto& p : confusion_pairs) {
        if (p.target >= num_classes || p.owner >= num_classes) fail("confusion_pairs", "class out of range");
        if (p.target == p.owner) fail("confusion_pairs", "target equals owner");
        if (p.concept_id && *p.concept_id >= num_concepts) fail("confusion_pairs", "concept out of range");
    }
}

RenderSettings DatasetSpec::render_settings() const {
    return RenderSettings{grid, noise, secondary_inclusion, confusion_inclusion};
}

std::uint64_t sample_seed(std::uint64_t dataset_seed, std::uint64_t split, ClassId cls, std::size_t index) {
    return derive_seed(dataset_seed, {0xda7a, split, cls, index});
}

Dataset dataset_skeleton(const DatasetSpec& spec) {
    spec.validate();
    Dataset ds;
    ds.spec = spec;
    ds.library = gen_concept_library(spec.num_concepts, spec.patch_size, derive_seed(spec.seed, {0x11b}));
    ds.signatures = gen_class_signatures(spec.num_classes, ds.library, spec.confusion_pairs,
                                         spec.secondaries_per_class, derive_seed(spec.seed, {0x516}));
    return ds;
}

Dataset gen_dataset(const DatasetSpec& spec) {
    Dataset ds = dataset_skeleton(spec);
    const RenderSettings rs = spec.render_settings();
    const std::size_t kept = spec.integrity == Integrity::Half ? (spec.train_per_class + 1) / 2 : spec.train_per_class;

    for (ClassId c = 0; c < spec.num_classes; ++c) {
        for (std::size_t i = 0; i < kept; ++i) {
            ds.train.push_back(render_sample(ds.signatures[c], ds.library, rs, sample_seed(spec.seed, 0, c, i)));
        }
    }
    for (ClassId c = 0; c < spec.num_classes; ++c) {
        for (std::size_t i = 0; i < spec.test_per_class; ++i) {
            ds.test.push_back(render_sample(ds.signatures[c], ds.library, rs, sample_seed(spec.seed, 1, c, i)));
        }
    }
    return ds;
}

std::vector<GridSample> gen_extra_samples(const Dataset& dataset, ClassId cls, std::size_t count,
                                          std::uint64_t stream) {
    if (cls >= dataset.num_classes()) throw std::invalid_argument("gen_extra_samples: unknown class");
    if (stream < 2) throw std::invalid_argument("gen_extra_samples: streams 0 and 1 are reserved for train/test");
    const RenderSettings rs = dataset.spec.render_settings();
    std::vector<GridSample> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        out.push_back(render_sample(dataset.signatures[cls], dataset.library, rs,
                                    sample_seed(dataset.spec.seed, stream, cls, i)));
    }
    return out;
}

std::vector<GridSample> half_per_class(std::span<const GridSample> samples, std::size_t num_classes) {
    std::vector<std::size_t> totals(num_classes, 0);
    for (const auto& s : samples) {
        if (s.label >= num_classes) throw std::invalid_argument("half_per_class: label out of range");
        ++totals[s.label];
    }
    std::vector<std::size_t> taken(num_classes, 0);
    std::vector<GridSample> out;
    for (const auto& s : samples) {
        if (taken[s.label] < (totals[s.label] + 1) / 2) {
            out.push_back(s);
            ++taken[s.label];
        }
    }
    return out;
}

}  // namespace ulab
