#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>

#include "ulab/pipeline/config.hpp"

namespace ulab {

/// A pipeline stage failed; the message starts with the stage name.
class StageError : public std::runtime_error {
public:
    StageError(std::string stage, const std::string& message);
    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

struct RunManifest {
    std::string stage;
    std::map<std::string, std::string> inputs;   // artifact name -> sha256
    std::map<std::string, std::string> outputs;  // artifact name -> sha256
    std::string config_hash;
    std::string started;  // UTC, ISO 8601
    std::string finished;
};

Json to_json(const RunManifest& manifest);
RunManifest manifest_from_json(const Json& j);

/// Output directory of one experiment. Artifacts are addressed by file name
/// relative to the root; each stage records a manifest under manifests/.
class RunDirectory {
public:
    explicit RunDirectory(std::filesystem::path root);

    const std::filesystem::path& root() const noexcept { return root_; }
    std::filesystem::path file(const std::string& name) const { return root_ / name; }
    std::filesystem::path manifest_path(const std::string& stage) const;

    std::optional<RunManifest> read_manifest(const std::string& stage) const;

    /// Verifies that `artifact` exists and still hashes to the value recorded
    /// by its producer, then records it as an input of `manifest`. Throws a
    /// StageError naming the consuming stage and the stale producer.
    void require(RunManifest& manifest, const std::string& artifact, const std::string& producer) const;

    /// Hashes every listed output, stamps the finish time and writes the
    /// manifest together with the effective config.
    void commit(RunManifest& manifest, const ExperimentConfig& config) const;

private:
    std::filesystem::path root_;
};

/// Current UTC time in ISO 8601.
std::string utc_timestamp();
RunManifest begin_stage(const std::string& stage, const ExperimentConfig& config);

}  // namespace ulab
