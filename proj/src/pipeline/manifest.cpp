#include "ulab/pipeline/manifest.hpp"

#include <chrono>
#include <ctime>
#include <fstream>

#include "ulab/io/csv.hpp"
#include "ulab/io/hash.hpp"

namespace ulab {

StageError::StageError(std::string stage, const std::string& message)
    : std::runtime_error(stage + ": " + message), stage_(std::move(stage)) {}

Json to_json(const RunManifest& m) {
    Json j;
    j["stage"] = m.stage;
    j["config_sha256"] = m.config_hash;
    j["inputs"] = m.inputs;
    j["outputs"] = m.outputs;
    j["started"] = m.started;
    j["finished"] = m.finished;
    return j;
}

RunManifest manifest_from_json(const Json& j) {
    RunManifest m;
    m.stage = j.at("stage").get<std::string>();
    m.config_hash = j.at("config_sha256").get<std::string>();
    m.inputs = j.at("inputs").get<std::map<std::string, std::string>>();
    m.outputs = j.at("outputs").get<std::map<std::string, std::string>>();
    m.started = j.value("started", "");
    m.finished = j.value("finished", "");
    return m;
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

RunManifest begin_stage(const std::string& stage, const ExperimentConfig& config) {
    RunManifest m;
    m.stage = stage;
    m.config_hash = config_hash(config);
    m.started = utc_timestamp();
    return m;
}

RunDirectory::RunDirectory(std::filesystem::path root) : root_(std::move(root)) {}

std::filesystem::path RunDirectory::manifest_path(const std::string& stage) const {
    return root_ / "manifests" / (stage + ".json");
}

std::optional<RunManifest> RunDirectory::read_manifest(const std::string& stage) const {
    const auto path = manifest_path(stage);
    if (!std::filesystem::exists(path)) return std::nullopt;
    std::ifstream in(path);
    try {
        return manifest_from_json(Json::parse(in));
    } catch (const std::exception& e) {
        throw StageError(stage, "unreadable manifest " + path.string() + ": " + e.what());
    }
}

void RunDirectory::require(RunManifest& manifest, const std::string& artifact, const std::string& producer) const {
    const auto path = file(artifact);
    if (!std::filesystem::exists(path)) {
        throw StageError(manifest.stage, "missing artifact " + path.string() + "; run stage '" + producer + "' first");
    }
    const auto recorded = read_manifest(producer);
    if (!recorded || !recorded->outputs.contains(artifact)) {
        throw StageError(manifest.stage, "artifact " + artifact + " has no manifest from stage '" + producer +
                                             "'; rerun stage '" + producer + "'");
    }
    const std::string hash = sha256_file(path);
    if (hash != recorded->outputs.at(artifact)) {
        throw StageError(manifest.stage, "artifact " + artifact + " does not match the manifest of stage '" + producer +
                                             "' (stale stage '" + producer + "'); rerun it");
    }
    manifest.inputs[artifact] = hash;
}

void RunDirectory::commit(RunManifest& manifest, const ExperimentConfig& config) const {
    save_text(root_ / "config.json", config_text(config));
    for (auto& [name, hash] : manifest.outputs) hash = sha256_file(file(name));
    manifest.finished = utc_timestamp();
    save_text(manifest_path(manifest.stage), to_json(manifest).dump(2) + "\n");
}

}  // namespace ulab
