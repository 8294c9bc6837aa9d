#include <CLI11.hpp>

#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <optional>

#include "ulab/pipeline/pipeline.hpp"

namespace {

constexpr int kStageFailure = 3;
constexpr int kConfigFailure = 4;

void print_table(const ulab::RunAllReport& rep) {
    std::vector<ulab::TableRow> rows;
    for (const auto& r : rep.rows) rows.push_back(r.row);
    std::cout << ulab::table_csv(rows).str();
    std::printf("original: A_global %.3f A_train %.3f Fr %.3f\n", rep.original.global, rep.original.train,
                rep.original_fr);
    std::printf("attack holdout AUC %.3f, shuffled control AUC %.3f\n", rep.attack.attack.holdout_auc,
                rep.attack.control_auc);
}

void print_text(const ulab::TextReport& rep) {
    std::printf("vocabulary %zu, pairs %zu (%zu sensitive)\n", rep.vocabulary, rep.pairs, rep.sensitive_pairs);
    std::printf("baseline appearance %.3f (%zu/%zu), utility %.3f\n", rep.baseline.rate, rep.baseline.frequency,
                rep.baseline.size, rep.utility_baseline);
    std::printf("unlearned appearance %.3f (%zu/%zu), utility %.3f\n", rep.unlearned.rate, rep.unlearned.frequency,
                rep.unlearned.size, rep.utility_unlearned);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Concept-guided poisoning unlearning lab"};
    app.require_subcommand(1, 1);

    std::string config_path;
    std::optional<std::string> out_dir;
    std::optional<std::uint64_t> seed;

    using Runner = std::function<void(const ulab::ExperimentConfig&)>;
    const std::pair<const char*, Runner> commands[] = {
        {"gen-data", ulab::cmd_gen_data},
        {"train", ulab::cmd_train},
        {"infer-concepts", ulab::cmd_infer_concepts},
        {"poison", ulab::cmd_poison},
        {"unlearn", ulab::cmd_unlearn},
        {"retrain", ulab::cmd_retrain},
        {"evaluate", ulab::cmd_evaluate},
        {"run-all", [](const ulab::ExperimentConfig& c) { print_table(ulab::cmd_run_all(c)); }},
        {"text-track", [](const ulab::ExperimentConfig& c) { print_text(ulab::cmd_text_track(c)); }},
    };
    std::map<CLI::App*, Runner> runners;
    for (const auto& [name, run] : commands) {
        CLI::App* sub = app.add_subcommand(name, std::string("run the ") + name + " stage");
        sub->add_option("--config", config_path, "experiment config (JSON)")->required();
        sub->add_option("--out", out_dir, "output directory, overrides out_dir");
        sub->add_option("--seed", seed, "global seed, overrides UNLEARN_SEED and the config");
        runners[sub] = run;
    }

    CLI11_PARSE(app, argc, argv);

    ulab::ExperimentConfig config;
    try {
        config = ulab::load_config(config_path);
        ulab::apply_seed_overrides(config, seed);
        if (out_dir) config.out_dir = *out_dir;
        config.validate();
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return kConfigFailure;
    }

    CLI::App* chosen = app.get_subcommands().front();
    try {
        runners.at(chosen)(config);
    } catch (const ulab::StageError& e) {
        std::cerr << "stage " << e.what() << "\n";
        return kStageFailure;
    } catch (const std::exception& e) {
        std::cerr << chosen->get_name() << ": " << e.what() << "\n";
        return 1;
    }
    return 0;
}
