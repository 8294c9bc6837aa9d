#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ulab/eval/mia.hpp"
#include "ulab/models/pcbm.hpp"
#include "ulab/poison/image_poison.hpp"
#include "ulab/unlearn/lm_unlearn.hpp"
#include "ulab/unlearn/unlearn.hpp"

namespace ulab {

struct PoisonSettings {
    ClassId target_class = 3;
    MaskMode mask = MaskMode::ConceptGuided;
    LabelStrategy labels = LabelStrategy::Random;
    Integrity integrity = Integrity::Full;
    std::uint64_t seed = 11;
};

struct EvalSettings {
    std::size_t bins = 20;
    double cap = 5.0;  // CE histogram range, larger values land in the overflow bin
    MiaOptions attack;
};

struct TextSettings {
    std::size_t pairs = 200;
    std::vector<std::string> sensitive_entities = default_sensitive_entities();
    std::size_t window = 4;
    std::size_t embedding = 32;
    std::size_t hidden = 128;
    LmHyper lm;
    LmUnlearnHyper unlearn;
    std::size_t ig_steps = 512;
    std::size_t importance_pairs = 20;
};

/// Every field has a default, so an empty JSON object is a valid config.
struct ExperimentConfig {
    std::uint64_t seed = 2024;
    std::filesystem::path out_dir = "out";
    DatasetSpec dataset;  // dataset.seed is ignored in favour of `seed`
    TrainHyper model;
    PcbmHyper pcbm;
    std::size_t top_m = 5;
    PoisonSettings poison;
    UnlearnHyper unlearn;
    EvalSettings eval;
    TextSettings text;

    /// Dataset spec with the global seed applied.
    DatasetSpec dataset_spec() const;
    void validate() const;
};

using Json = nlohmann::ordered_json;

Json to_json(const ExperimentConfig& config);
/// Rejects unknown keys and wrongly typed values with the offending path.
ExperimentConfig config_from_json(const Json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Seed precedence: explicit override, then UNLEARN_SEED, then the file.
void apply_seed_overrides(ExperimentConfig& config, std::optional<std::uint64_t> cli_seed);

/// Canonical JSON text of the effective config and its SHA-256.
std::string config_text(const ExperimentConfig& config);
std::string config_hash(const ExperimentConfig& config);

}  // namespace ulab
