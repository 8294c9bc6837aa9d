#include "ulab/io/checkpoint.hpp"

#include <json.hpp>

#include "binary.hpp"
#include "ulab/io/hash.hpp"

namespace ulab {

namespace {

using json = nlohmann::ordered_json;
constexpr const char* kFormat = "ulab-checkpoint/1";

struct NamedTensor {
    std::string name;
    const Tensor* value;
};

json history_json(const std::vector<EpochRecord>& history) {
    json out = json::array();
    for (const auto& r : history) out.push_back({{"epoch", r.epoch}, {"loss", r.loss}, {"accuracy", r.accuracy}});
    return out;
}

std::vector<EpochRecord> history_from(const json& j) {
    std::vector<EpochRecord> out;
    for (const auto& r : j) out.push_back({r.at("epoch").get<std::size_t>(), r.at("loss").get<double>(), r.at("accuracy").get<double>()});
    return out;
}

void write_checkpoint(const std::filesystem::path& manifest, json head, const std::vector<NamedTensor>& tensors) {
    detail::ByteWriter w;
    json params = json::array();
    std::size_t offset = 0;
    for (const auto& t : tensors) {
        for (double v : t.value->data()) w.f64(v);
        params.push_back({{"name", t.name}, {"shape", t.value->shape()}, {"offset", offset}, {"count", t.value->size()}});
        offset += t.value->size();
    }
    const auto blob = blob_path(manifest);
    head["format"] = kFormat;
    head["parameters"] = std::move(params);
    head["blob"] = blob.filename().string();
    head["blob_sha256"] = sha256_hex(w.bytes());
    detail::write_file(blob, w.bytes());
    detail::write_file(manifest, head.dump(2) + "\n");
}

struct Loaded {
    json manifest;
    std::map<std::string, Tensor> tensors;
};

Loaded read_checkpoint(const std::filesystem::path& manifest, const std::string& kind) {
    Loaded out;
    try {
        out.manifest = json::parse(detail::read_file(manifest));
    } catch (const json::parse_error& e) {
        throw FormatError(manifest.string() + ": " + e.what());
    }
    const json& m = out.manifest;
    if (m.value("format", "") != kFormat) throw FormatError(manifest.string() + ": not a checkpoint manifest");
    if (m.value("kind", "") != kind) {
        throw FormatError(manifest.string() + ": holds a " + m.value("kind", "?") + " checkpoint, expected " + kind);
    }
    const auto blob_file = manifest.parent_path() / m.at("blob").get<std::string>();
    const std::string blob = detail::read_file(blob_file);
    if (sha256_hex(blob) != m.at("blob_sha256").get<std::string>()) {
        throw FormatError(blob_file.string() + ": parameter blob hash does not match its manifest");
    }
    detail::ByteReader r(blob);
    for (const auto& p : m.at("parameters")) {
        Shape shape = p.at("shape").get<Shape>();
        const auto count = p.at("count").get<std::size_t>();
        if (shape_volume(shape) != count) throw FormatError(manifest.string() + ": parameter count does not match shape");
        std::vector<double> v(count);
        for (auto& x : v) x = r.f64();
        out.tensors[p.at("name").get<std::string>()] = Tensor(std::move(shape), std::move(v));
    }
    if (!r.done()) throw FormatError(blob_file.string() + ": blob is longer than the manifest describes");
    return out;
}

/// Overwrites every graph parameter from `tensors`, requiring identical names and shapes.
void restore_graph(Graph& g, const std::map<std::string, Tensor>& tensors, const std::filesystem::path& manifest) {
    const auto ids = g.parameters();
    if (ids.size() != tensors.size()) throw FormatError(manifest.string() + ": parameter count does not match the architecture");
    for (auto id : ids) {
        auto it = tensors.find(g.name(id));
        if (it == tensors.end()) throw FormatError(manifest.string() + ": missing parameter " + g.name(id));
        if (it->second.shape() != g.parameter_value(id).shape()) {
            throw FormatError(manifest.string() + ": shape mismatch for parameter " + g.name(id));
        }
        g.parameter_value(id) = it->second;
    }
}

std::vector<NamedTensor> graph_tensors(const Graph& g) {
    std::vector<NamedTensor> out;
    for (auto id : g.parameters()) out.push_back({g.name(id), &g.parameter_value(id)});
    return out;
}

}  // namespace

std::filesystem::path blob_path(const std::filesystem::path& manifest) {
    auto p = manifest;
    p.replace_extension(".bin");
    return p;
}

void save_classifier(const Classifier& model, const std::filesystem::path& manifest) {
    const auto& a = model.architecture();
    json head;
    head["kind"] = "classifier";
    head["architecture"] = {{"input_width", a.input_width}, {"hidden", a.hidden}, {"num_classes", a.num_classes}};
    head["init_seed"] = model.init_seed();
    head["history"] = history_json(model.history());
    write_checkpoint(manifest, std::move(head), graph_tensors(model.graph()));
}

Classifier load_classifier(const std::filesystem::path& manifest) {
    auto loaded = read_checkpoint(manifest, "classifier");
    const json& m = loaded.manifest;
    MlpArchitecture a;
    a.input_width = m.at("architecture").at("input_width").get<std::size_t>();
    a.hidden = m.at("architecture").at("hidden").get<std::vector<std::size_t>>();
    a.num_classes = m.at("architecture").at("num_classes").get<std::size_t>();
    Classifier model = Classifier::initialize(a, m.at("init_seed").get<std::uint64_t>());
    restore_graph(model.graph(), loaded.tensors, manifest);
    model.history() = history_from(m.at("history"));
    return model;
}

void save_window_lm(const WindowLm& lm, const std::filesystem::path& manifest) {
    const auto& a = lm.architecture();
    json head;
    head["kind"] = "window_lm";
    head["architecture"] = {{"vocab", a.vocab}, {"window", a.window}, {"embedding", a.embedding}, {"hidden", a.hidden}};
    head["init_seed"] = lm.init_seed();
    head["history"] = history_json(lm.history());
    write_checkpoint(manifest, std::move(head), graph_tensors(lm.graph()));
}

WindowLm load_window_lm(const std::filesystem::path& manifest) {
    auto loaded = read_checkpoint(manifest, "window_lm");
    const json& m = loaded.manifest;
    const json& j = m.at("architecture");
    LmArchitecture a{j.at("vocab").get<std::size_t>(), j.at("window").get<std::size_t>(),
                     j.at("embedding").get<std::size_t>(), j.at("hidden").get<std::size_t>()};
    WindowLm lm = WindowLm::initialize(a, m.at("init_seed").get<std::uint64_t>());
    restore_graph(lm.graph(), loaded.tensors, manifest);
    lm.history() = history_from(m.at("history"));
    return lm;
}

void save_pcbm(const PcbmHead& pcbm, const PcbmHyper& hyper, const std::filesystem::path& manifest) {
    json head;
    head["kind"] = "pcbm";
    head["architecture"] = {{"embedding_width", pcbm.embedding_width()},
                            {"num_concepts", pcbm.num_concepts()},
                            {"num_classes", pcbm.num_classes()}};
    head["hyper"] = {{"lambda", hyper.lambda}, {"steps", hyper.steps}, {"learning_rate", hyper.learning_rate}};
    write_checkpoint(manifest, std::move(head),
                     {{"center", &pcbm.center()},
                      {"scale", &pcbm.scale()},
                      {"phi_weight", &pcbm.phi_weight()},
                      {"phi_bias", &pcbm.phi_bias()},
                      {"psi", &pcbm.psi_matrix()}});
}

PcbmHead load_pcbm(const std::filesystem::path& manifest) {
    auto loaded = read_checkpoint(manifest, "pcbm");
    auto take = [&](const char* name) {
        auto it = loaded.tensors.find(name);
        if (it == loaded.tensors.end()) throw FormatError(manifest.string() + ": missing tensor " + name);
        return it->second;
    };
    try {
        return PcbmHead(take("center"), take("scale"), take("phi_weight"), take("phi_bias"), take("psi"));
    } catch (const std::invalid_argument& e) {
        throw FormatError(manifest.string() + ": " + e.what());
    }
}

}  // namespace ulab
