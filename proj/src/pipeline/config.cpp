#include "ulab/pipeline/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <stdexcept>

#include "ulab/io/dataset_file.hpp"
#include "ulab/io/hash.hpp"

namespace ulab {

namespace {

std::string optimizer_name(OptimizerKind k) { return k == OptimizerKind::Sgd ? "sgd" : "adam"; }

OptimizerKind optimizer_from(const std::string& s) {
    if (s == "sgd") return OptimizerKind::Sgd;
    if (s == "adam") return OptimizerKind::Adam;
    throw std::invalid_argument("optimizer: expected sgd or adam, got '" + s + "'");
}

/// Reads the keys of one JSON object and reports leftovers as unknown.
class Section {
public:
    Section(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw std::invalid_argument("config " + path_ + ": expected an object");
    }

    template <class T>
    void get(const char* key, T& out) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const nlohmann::json::exception&) {
            throw std::invalid_argument("config " + where(key) + ": wrong type");
        }
    }

    void optimizer(const char* key, OptimizerKind& out) {
        std::string s = optimizer_name(out);
        get(key, s);
        wrap(key, [&] { out = optimizer_from(s); });
    }

    void optional_double(const char* key, std::optional<double>& out) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        const auto& v = j_.at(key);
        if (v.is_null()) {
            out.reset();
        } else if (v.is_number()) {
            out = v.get<double>();
        } else {
            throw std::invalid_argument("config " + where(key) + ": expected a number or null");
        }
    }

    const Json* child(const char* key) {
        seen_.insert(key);
        return j_.contains(key) ? &j_.at(key) : nullptr;
    }

    template <class F>
    void wrap(const char* key, F&& f) {
        try {
            f();
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument("config " + where(key) + ": " + e.what());
        }
    }

    std::string where(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

    void finish() const {
        for (const auto& [k, v] : j_.items()) {
            if (!seen_.contains(k)) throw std::invalid_argument("config: unknown key '" + where(k.c_str()) + "'");
        }
    }

private:
    const Json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

Json mia_json(const MiaOptions& o) {
    return {{"holdout", o.holdout},
            {"steps", o.steps},
            {"learning_rate", o.learning_rate},
            {"seed", o.seed},
            {"control_permutations", o.control_permutations}};
}

}  // namespace

DatasetSpec ExperimentConfig::dataset_spec() const {
    DatasetSpec s = dataset;
    s.seed = seed;
    return s;
}

void ExperimentConfig::validate() const {
    dataset_spec().validate();
    if (model.epochs == 0 || model.batch == 0 || model.learning_rate <= 0.0) {
        throw std::invalid_argument("config model: epochs, batch and learning_rate must be positive");
    }
    if (pcbm.lambda < 0.0 || pcbm.steps == 0 || pcbm.learning_rate <= 0.0) {
        throw std::invalid_argument("config pcbm: lambda must be non-negative, steps and learning_rate positive");
    }
    if (top_m == 0 || top_m > dataset.num_concepts) throw std::invalid_argument("config top_m: must lie in [1, K]");
    if (poison.target_class >= dataset.num_classes) throw std::invalid_argument("config poison.target_class: out of range");
    unlearn.validate();
    if (eval.bins < 10) throw std::invalid_argument("config eval.bins: need at least 10 bins");
    if (eval.cap <= 0.0) throw std::invalid_argument("config eval.cap: must be positive");
    if (eval.attack.holdout <= 0.0 || eval.attack.holdout >= 1.0) {
        throw std::invalid_argument("config eval.attack.holdout: must lie in (0,1)");
    }
    if (text.pairs == 0 || text.window < 2 || text.embedding == 0 || text.hidden == 0) {
        throw std::invalid_argument("config text: pairs, window, embedding and hidden must be positive (window >= 2)");
    }
    if (text.ig_steps == 0) throw std::invalid_argument("config text.ig_steps: must be positive");
}

Json to_json(const ExperimentConfig& c) {
    Json pairs = Json::array();
    for (const auto& p : c.dataset.confusion_pairs) {
        pairs.push_back({{"target", p.target}, {"owner", p.owner},
                         {"concept", p.concept_id ? Json(*p.concept_id) : Json(nullptr)}});
    }
    const auto& d = c.dataset;
    Json j;
    j["seed"] = c.seed;
    j["out_dir"] = c.out_dir.string();
    j["dataset"] = {{"num_classes", d.num_classes},
                    {"num_concepts", d.num_concepts},
                    {"grid", d.grid},
                    {"patch_size", d.patch_size},
                    {"train_per_class", d.train_per_class},
                    {"test_per_class", d.test_per_class},
                    {"noise", d.noise},
                    {"secondary_inclusion", d.secondary_inclusion},
                    {"confusion_inclusion", d.confusion_inclusion},
                    {"secondaries_per_class", d.secondaries_per_class},
                    {"confusion_pairs", pairs},
                    {"integrity", to_string(d.integrity)}};
    j["model"] = {{"epochs", c.model.epochs},
                  {"batch", c.model.batch},
                  {"learning_rate", c.model.learning_rate},
                  {"optimizer", optimizer_name(c.model.optimizer)},
                  {"seed", c.model.seed}};
    j["pcbm"] = {{"lambda", c.pcbm.lambda},
                 {"steps", c.pcbm.steps},
                 {"learning_rate", c.pcbm.learning_rate},
                 {"top_m", c.top_m}};
    j["poison"] = {{"target_class", c.poison.target_class},
                   {"mask", to_string(c.poison.mask)},
                   {"labels", to_string(c.poison.labels)},
                   {"integrity", to_string(c.poison.integrity)},
                   {"seed", c.poison.seed}};
    j["unlearn"] = {{"epochs", c.unlearn.epochs},
                    {"batch", c.unlearn.batch},
                    {"learning_rate", c.unlearn.learning_rate},
                    {"optimizer", optimizer_name(c.unlearn.optimizer)},
                    {"seed", c.unlearn.seed},
                    {"tau", c.unlearn.tau ? Json(*c.unlearn.tau) : Json(nullptr)}};
    j["eval"] = {{"bins", c.eval.bins}, {"cap", c.eval.cap}, {"attack", mia_json(c.eval.attack)}};
    const auto& t = c.text;
    j["text"] = {{"pairs", t.pairs},
                 {"sensitive_entities", t.sensitive_entities},
                 {"window", t.window},
                 {"embedding", t.embedding},
                 {"hidden", t.hidden},
                 {"lm", {{"epochs", t.lm.epochs},
                         {"batch", t.lm.batch},
                         {"learning_rate", t.lm.learning_rate},
                         {"optimizer", optimizer_name(t.lm.optimizer)},
                         {"seed", t.lm.seed}}},
                 {"unlearn", {{"epochs", t.unlearn.epochs},
                              {"batch", t.unlearn.batch},
                              {"learning_rate", t.unlearn.learning_rate},
                              {"optimizer", optimizer_name(t.unlearn.optimizer)},
                              {"seed", t.unlearn.seed}}},
                 {"ig_steps", t.ig_steps},
                 {"importance_pairs", t.importance_pairs}};
    return j;
}

ExperimentConfig config_from_json(const Json& j) {
    ExperimentConfig c;
    Section root(j, "");
    root.get("seed", c.seed);
    std::string out = c.out_dir.string();
    root.get("out_dir", out);
    c.out_dir = out;

    if (const Json* d = root.child("dataset")) {
        Section s(*d, "dataset");
        auto& ds = c.dataset;
        s.get("num_classes", ds.num_classes);
        s.get("num_concepts", ds.num_concepts);
        s.get("grid", ds.grid);
        s.get("patch_size", ds.patch_size);
        s.get("train_per_class", ds.train_per_class);
        s.get("test_per_class", ds.test_per_class);
        s.get("noise", ds.noise);
        s.get("secondary_inclusion", ds.secondary_inclusion);
        s.get("confusion_inclusion", ds.confusion_inclusion);
        s.get("secondaries_per_class", ds.secondaries_per_class);
        if (const Json* pairs = s.child("confusion_pairs")) {
            if (!pairs->is_array()) throw std::invalid_argument("config dataset.confusion_pairs: expected an array");
            ds.confusion_pairs.clear();
            for (const auto& p : *pairs) {
                Section ps(p, "dataset.confusion_pairs[]");
                ConfusionPair cp;
                ps.get("target", cp.target);
                ps.get("owner", cp.owner);
                std::optional<double> concept_id;
                ps.optional_double("concept", concept_id);
                if (concept_id) cp.concept_id = static_cast<ConceptId>(*concept_id);
                ps.finish();
                ds.confusion_pairs.push_back(cp);
            }
        }
        std::string integrity = to_string(ds.integrity);
        s.get("integrity", integrity);
        s.wrap("integrity", [&] { ds.integrity = integrity_from_string(integrity); });
        s.finish();
    }
    if (const Json* m = root.child("model")) {
        Section s(*m, "model");
        s.get("epochs", c.model.epochs);
        s.get("batch", c.model.batch);
        s.get("learning_rate", c.model.learning_rate);
        s.optimizer("optimizer", c.model.optimizer);
        s.get("seed", c.model.seed);
        s.finish();
    }
    if (const Json* p = root.child("pcbm")) {
        Section s(*p, "pcbm");
        s.get("lambda", c.pcbm.lambda);
        s.get("steps", c.pcbm.steps);
        s.get("learning_rate", c.pcbm.learning_rate);
        s.get("top_m", c.top_m);
        s.finish();
    }
    if (const Json* p = root.child("poison")) {
        Section s(*p, "poison");
        s.get("target_class", c.poison.target_class);
        std::string mask = to_string(c.poison.mask), labels = to_string(c.poison.labels);
        std::string integrity = to_string(c.poison.integrity);
        s.get("mask", mask);
        s.get("labels", labels);
        s.get("integrity", integrity);
        s.wrap("mask", [&] { c.poison.mask = mask_mode_from_string(mask); });
        s.wrap("labels", [&] { c.poison.labels = label_strategy_from_string(labels); });
        s.wrap("integrity", [&] { c.poison.integrity = integrity_from_string(integrity); });
        s.get("seed", c.poison.seed);
        s.finish();
    }
    if (const Json* u = root.child("unlearn")) {
        Section s(*u, "unlearn");
        s.get("epochs", c.unlearn.epochs);
        s.get("batch", c.unlearn.batch);
        s.get("learning_rate", c.unlearn.learning_rate);
        s.optimizer("optimizer", c.unlearn.optimizer);
        s.get("seed", c.unlearn.seed);
        s.optional_double("tau", c.unlearn.tau);
        s.finish();
    }
    if (const Json* e = root.child("eval")) {
        Section s(*e, "eval");
        s.get("bins", c.eval.bins);
        s.get("cap", c.eval.cap);
        if (const Json* a = s.child("attack")) {
            Section as(*a, "eval.attack");
            as.get("holdout", c.eval.attack.holdout);
            as.get("steps", c.eval.attack.steps);
            as.get("learning_rate", c.eval.attack.learning_rate);
            as.get("seed", c.eval.attack.seed);
            as.get("control_permutations", c.eval.attack.control_permutations);
            as.finish();
        }
        s.finish();
    }
    if (const Json* t = root.child("text")) {
        Section s(*t, "text");
        auto& tx = c.text;
        s.get("pairs", tx.pairs);
        s.get("sensitive_entities", tx.sensitive_entities);
        s.get("window", tx.window);
        s.get("embedding", tx.embedding);
        s.get("hidden", tx.hidden);
        if (const Json* lm = s.child("lm")) {
            Section ls(*lm, "text.lm");
            ls.get("epochs", tx.lm.epochs);
            ls.get("batch", tx.lm.batch);
            ls.get("learning_rate", tx.lm.learning_rate);
            ls.optimizer("optimizer", tx.lm.optimizer);
            ls.get("seed", tx.lm.seed);
            ls.finish();
        }
        if (const Json* un = s.child("unlearn")) {
            Section us(*un, "text.unlearn");
            us.get("epochs", tx.unlearn.epochs);
            us.get("batch", tx.unlearn.batch);
            us.get("learning_rate", tx.unlearn.learning_rate);
            us.optimizer("optimizer", tx.unlearn.optimizer);
            us.get("seed", tx.unlearn.seed);
            us.finish();
        }
        s.get("ig_steps", tx.ig_steps);
        s.get("importance_pairs", tx.importance_pairs);
        s.finish();
    }
    root.finish();
    c.validate();
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read config " + path.string());
    Json j;
    try {
        j = Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw std::invalid_argument("config " + path.string() + ": " + e.what());
    }
    return config_from_json(j);
}

void apply_seed_overrides(ExperimentConfig& config, std::optional<std::uint64_t> cli_seed) {
    if (cli_seed) {
        config.seed = *cli_seed;
        return;
    }
    if (const char* env = std::getenv("UNLEARN_SEED"); env && *env) {
        std::size_t used = 0;
        unsigned long long v = 0;
        try {
            v = std::stoull(env, &used, 10);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || env[used] != '\0') throw std::invalid_argument("UNLEARN_SEED must be a non-negative integer");
        config.seed = v;
    }
}

std::string config_text(const ExperimentConfig& config) { return to_json(config).dump(2) + "\n"; }

std::string config_hash(const ExperimentConfig& config) { return sha256_hex(config_text(config)); }

}  // namespace ulab
