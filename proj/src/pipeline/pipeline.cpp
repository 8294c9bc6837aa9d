#include "ulab/pipeline/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "ulab/io/checkpoint.hpp"
#include "ulab/io/corpus_file.hpp"
#include "ulab/io/dataset_file.hpp"
#include "ulab/poison/text_poison.hpp"

namespace ulab {

namespace {

constexpr int kDecimals = 3;

std::string rate(double v) { return fixed(v, kDecimals); }

std::string labels_text(LabelStrategy s) { return to_string(s); }

double min_finite(const std::vector<double>& v) {
    double out = std::numeric_limits<double>::infinity();
    for (double x : v) {
        if (std::isfinite(x)) out = std::min(out, x);
    }
    return out;
}

Json confusions_json(const std::vector<ConfusionTriple>& triples, const ConceptLibrary& library) {
    Json out = Json::array();
    for (const auto& t : triples) {
        out.push_back({{"class", t.cls},
                       {"concept", t.concept_id},
                       {"concept_name", library.names.at(t.concept_id)},
                       {"owner", t.owner},
                       {"score", t.score}});
    }
    return out;
}

std::vector<ConfusionTriple> confusions_from(const Json& j) {
    std::vector<ConfusionTriple> out;
    for (const auto& t : j.at("confusions")) {
        out.push_back({t.at("class").get<ClassId>(), t.at("concept").get<ConceptId>(), t.at("owner").get<ClassId>(),
                       t.at("score").get<double>()});
    }
    return out;
}

Json accuracy_json(const AccuracyTriple& a) {
    return {{"A_global", a.global}, {"A_train", a.train}, {"A_test", a.test}, {"A_retain", a.retain}};
}

Json histogram_json(const CeHistogram& h) {
    return {{"group", to_string(h.group)}, {"size", h.total()}, {"median", h.median()}, {"counts", h.counts}};
}

CsvTable history_csv(const std::vector<EpochRecord>& history) {
    CsvTable t({"epoch", "loss", "accuracy"});
    for (const auto& r : history) t.add({std::to_string(r.epoch), exact(r.loss), exact(r.accuracy)});
    return t;
}

/// Trajectory with an epoch-0 point for the model before fine-tuning.
std::vector<TrajectoryPoint> with_start(const Classifier& original, const Dataset& ds, const PoisonedDataset& poisoned,
                                        const std::vector<TrajectoryPoint>& trajectory) {
    std::vector<TrajectoryPoint> out;
    TrajectoryPoint start;
    start.accuracy = accuracy_triple(original, ds, poisoned.plan.target_class);
    start.loss = loss_decomposition(original, poisoned.retain, original_unlearn_set(poisoned));
    out.push_back(start);
    out.insert(out.end(), trajectory.begin(), trajectory.end());
    return out;
}

Json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    return Json::parse(in);
}

bool plan_needs_confusion(const PoisonSettings& s) {
    return s.mask == MaskMode::ConceptGuided || s.labels == LabelStrategy::Targeted;
}

template <class F>
auto run_stage(const std::string& stage, F&& body) {
    try {
        return body();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(stage, e.what());
    }
}

}  // namespace

CsvTable table_csv(const std::vector<TableRow>& rows) {
    CsvTable t({"Type", "Integrity", "P_label", "A_global", "A_train", "A_test", "Fr", "A_retain"});
    for (const auto& r : rows) {
        t.add({r.type, r.integrity, r.labels, rate(r.accuracy.global), rate(r.accuracy.train), rate(r.accuracy.test),
               rate(r.forgetting_rate), rate(r.accuracy.retain)});
    }
    return t;
}

Json table_json(const std::vector<TableRow>& rows) {
    Json out = Json::array();
    for (const auto& r : rows) {
        Json j = {{"Type", r.type}, {"Integrity", r.integrity}, {"P_label", r.labels}};
        j.update(accuracy_json(r.accuracy));
        j["Fr"] = r.forgetting_rate;
        out.push_back(std::move(j));
    }
    return out;
}

CsvTable histogram_csv(std::span<const CeHistogram> histograms) {
    CsvTable t({"group", "bin_low", "bin_high", "count"});
    for (const auto& h : histograms) {
        for (std::size_t b = 0; b < h.counts.size(); ++b) {
            const bool overflow = b + 1 == h.counts.size();
            t.add({to_string(h.group), exact(h.edges.at(overflow ? h.edges.size() - 1 : b)),
                   overflow ? "inf" : exact(h.edges.at(b + 1)), std::to_string(h.counts[b])});
        }
    }
    return t;
}

CsvTable trajectory_csv(const std::vector<TrajectoryPoint>& trajectory) {
    CsvTable t({"epoch", "A_global", "A_train", "A_test", "L_retain", "L_unlearn", "L_goal"});
    for (const auto& p : trajectory) {
        t.add({std::to_string(p.epoch), rate(p.accuracy.global), rate(p.accuracy.train), rate(p.accuracy.test),
               fixed(p.loss.retain, 6), fixed(p.loss.unlearn, 6), fixed(p.loss.goal, 6)});
    }
    return t;
}

CsvTable rankings_csv(const std::vector<ConceptRanking>& rankings, const ConceptLibrary& library) {
    CsvTable t({"class", "concept", "concept_name", "score", "rank"});
    for (const auto& r : rankings) {
        const auto full = rank_concepts(r.scores, r.scores.size(), r.cls);
        for (std::size_t k = 0; k < full.top.size(); ++k) {
            const ConceptId j = full.top[k];
            t.add({std::to_string(r.cls), std::to_string(j), library.names.at(j), fixed(r.scores[j], 6),
                   std::to_string(k + 1)});
        }
    }
    return t;
}

std::string row_type(MaskMode mask) {
    switch (mask) {
        case MaskMode::None: return "Random labels";
        case MaskMode::Full: return "Full mask poisoning";
        case MaskMode::ConceptGuided: return "Concepts inference unlearning";
    }
    return "?";
}

UnlearnHyper fixed_budget(const UnlearnHyper& hyper) {
    UnlearnHyper h = hyper;
    h.tau.reset();
    return h;
}

PoisonPlan make_plan(const PoisonSettings& s, const Dataset& dataset, std::span<const ConfusionTriple> confusions) {
    if (s.target_class >= dataset.num_classes()) throw std::invalid_argument("poison: target class out of range");
    PoisonPlan p;
    p.target_class = s.target_class;
    p.target_primary = dataset.signatures.at(s.target_class).primary;
    p.mask = s.mask;
    p.labels = s.labels;
    p.integrity = s.integrity;
    p.seed = s.seed;
    if (plan_needs_confusion(s)) {
        const auto it = std::find_if(confusions.begin(), confusions.end(),
                                     [&](const ConfusionTriple& t) { return t.cls == s.target_class; });
        if (it == confusions.end()) {
            throw std::invalid_argument("no concept confusion was detected for target class " +
                                        std::to_string(s.target_class) +
                                        "; concept-guided masks and targeted labels need one");
        }
        p.confusing_concept = it->concept_id;
        p.owner_class = it->owner;
    }
    p.validate(dataset.num_classes());
    return p;
}

void cmd_gen_data(const ExperimentConfig& config) {
    run_stage("gen-data", [&] {
        RunDirectory dir(config.out_dir);
        auto m = begin_stage("gen-data", config);
        save_dataset(gen_dataset(config.dataset_spec()), dir.file(artifact::kDataset));
        m.outputs[artifact::kDataset];
        dir.commit(m, config);
    });
}

void cmd_train(const ExperimentConfig& config) {
    run_stage("train", [&] {
        RunDirectory dir(config.out_dir);
        auto m = begin_stage("train", config);
        dir.require(m, artifact::kDataset, "gen-data");
        const Dataset ds = load_dataset(dir.file(artifact::kDataset));
        const Classifier model = train_classifier(ds, config.model);
        save_classifier(model, dir.file(artifact::kModel));
        history_csv(model.history()).save(dir.file(artifact::kTrainHistory));
        for (const char* f : {artifact::kModel, artifact::kModelBlob, artifact::kTrainHistory}) m.outputs[f];
        dir.commit(m, config);
    });
}

void cmd_infer_concepts(const ExperimentConfig& config) {
    run_stage("infer-concepts", [&] {
        RunDirectory dir(config.out_dir);
        auto m = begin_stage("infer-concepts", config);
        dir.require(m, artifact::kDataset, "gen-data");
        dir.require(m, artifact::kModel, "train");
        dir.require(m, artifact::kModelBlob, "train");
        const Dataset ds = load_dataset(dir.file(artifact::kDataset));
        const Classifier model = load_classifier(dir.file(artifact::kModel));
        const PcbmHead pcbm = fit_pcbm(model, ds.train, config.pcbm);
        const auto rankings = rank_all_classes(pcbm, model, ds.train, ds.num_classes(), config.top_m);
        const auto triples = detect_confusions(rankings, ds.signatures, config.top_m);

        const auto test = make_examples(ds.test);
        const auto pred = pcbm.predict(model, test.features);
        std::size_t correct = 0;
        for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == test.labels[i];

        save_pcbm(pcbm, config.pcbm, dir.file(artifact::kPcbm));
        rankings_csv(rankings, ds.library).save(dir.file(artifact::kRankings));
        Json j;
        j["top_m"] = config.top_m;
        j["pcbm_test_accuracy"] = static_cast<double>(correct) / static_cast<double>(pred.size());
        j["min_concept_auc"] = min_finite(concept_aucs(pcbm, model, ds.test));
        j["confusions"] = confusions_json(triples, ds.library);
        save_text(dir.file(artifact::kConfusions), j.dump(2) + "\n");
        for (const char* f : {artifact::kPcbm, artifact::kPcbmBlob, artifact::kRankings, artifact::kConfusions}) {
            m.outputs[f];
        }
        dir.commit(m, config);
    });
}

void cmd_poison(const ExperimentConfig& config) {
    run_stage("poison", [&] {
        RunDirectory dir(config.out_dir);
        auto m = begin_stage("poison", config);
        dir.require(m, artifact::kDataset, "gen-data");
        std::vector<ConfusionTriple> triples;
        if (plan_needs_confusion(config.poison)) {
            dir.require(m, artifact::kConfusions, "infer-concepts");
            triples = confusions_from(read_json(dir.file(artifact::kConfusions)));
        }
        const Dataset ds = load_dataset(dir.file(artifact::kDataset));
        const PoisonPlan plan = make_plan(config.poison, ds, triples);
        save_poisoned(build_poisoned_dataset(ds, plan), ds.spec, dir.file(artifact::kPoisoned));
        m.outputs[artifact::kPoisoned];
        dir.commit(m, config);
    });
}

void cmd_unlearn(const ExperimentConfig& config) {
    run_stage("unlearn", [&] {
        RunDirectory dir(config.out_dir);
        auto m = begin_stage("unlearn", config);
        dir.require(m, artifact::kDataset, "gen-data");
        dir.require(m, artifact::kModel, "train");
        dir.require(m, artifact::kModelBlob, "train");
        dir.require(m, artifact::kPoisoned, "poison");
        const Dataset ds = load_dataset(dir.file(artifact::kDataset));
        const Classifier model = load_classifier(dir.file(artifact::kModel));
        const PoisonedFile pf = load_poisoned(dir.file(artifact::kPoisoned));
        if (pf.spec.seed != ds.spec.seed) throw std::invalid_argument("poisoned set was built from a different dataset");
        const UnlearnRun run = unlearn_finetune(model, ds, pf.poisoned, config.unlearn);
        save_classifier(run.model, dir.file(artifact::kUnlearned));
        trajectory_csv(with_start(model, ds, pf.poisoned, run.trajectory)).save(dir.file(artifact::kTrajectory));
        for (const char* f : {artifact::kUnlearned, artifact::kUnlearnedBlob, artifact::kTrajectory}) m.outputs[f];
        dir.commit(m, config);
    });
}

void cmd_retrain(const ExperimentConfig& config) {
    run_stage("retrain", [&] {
        RunDirectory dir(config.out_dir);
        auto m = begin_stage("retrain", config);
        dir.require(m, artifact::kDataset, "gen-data");
        const Dataset ds = load_dataset(dir.file(artifact::kDataset));
        save_classifier(retrain_baseline(ds, config.poison.target_class, config.model), dir.file(artifact::kRetrained));
        for (const char* f : {artifact::kRetrained, artifact::kRetrainedBlob}) m.outputs[f];
        dir.commit(m, config);
    });
}

void cmd_evaluate(const ExperimentConfig& config) {
    run_stage("evaluate", [&] {
        RunDirectory dir(config.out_dir);
        auto m = begin_stage("evaluate", config);
        dir.require(m, artifact::kDataset, "gen-data");
        dir.require(m, artifact::kModel, "train");
        dir.require(m, artifact::kModelBlob, "train");
        dir.require(m, artifact::kPoisoned, "poison");
        dir.require(m, artifact::kUnlearned, "unlearn");
        dir.require(m, artifact::kUnlearnedBlob, "unlearn");
        dir.require(m, artifact::kRetrained, "retrain");
        dir.require(m, artifact::kRetrainedBlob, "retrain");
        const Dataset ds = load_dataset(dir.file(artifact::kDataset));
        const PoisonedFile pf = load_poisoned(dir.file(artifact::kPoisoned));
        const ClassId target = pf.poisoned.plan.target_class;
        const Classifier original = load_classifier(dir.file(artifact::kModel));
        const Classifier unlearned = load_classifier(dir.file(artifact::kUnlearned));
        const Classifier retrained = load_classifier(dir.file(artifact::kRetrained));

        const ShadowAttack shadow = build_shadow_attack(ds, target, config.model, config.eval.attack);
        const auto members = filter_class(ds.train, target, true);
        const auto fr = [&](const Classifier& c) { return forgetting_rate(shadow.attack, c, members); };
        const auto& plan = pf.poisoned.plan;
        std::vector<TableRow> rows{
            {"Original", to_string(ds.spec.integrity), "-", accuracy_triple(original, ds, target), fr(original)},
            {"Retrain", to_string(ds.spec.integrity), "-", accuracy_triple(retrained, ds, target), fr(retrained)},
            {row_type(plan.mask), to_string(plan.integrity), labels_text(plan.labels), accuracy_triple(unlearned, ds, target),
             fr(unlearned)},
        };
        table_csv(rows).save(dir.file(artifact::kMetricsCsv));

        Json hist;
        const std::pair<const char*, const Classifier*> models[] = {
            {"original", &original}, {"unlearned", &unlearned}, {"retrained", &retrained}};
        std::array<CeHistogram, 3> before{};
        for (const auto& [name, model] : models) {
            const auto h = ce_histograms(*model, ds, target, config.eval.bins, config.eval.cap);
            if (std::string(name) == "original") before = h;
            const std::string file = std::string("ce_hist_") + name + ".csv";
            histogram_csv(h).save(dir.file(file));
            m.outputs[file];
            Json groups = Json::array();
            for (const auto& g : h) groups.push_back(histogram_json(g));
            hist[name] = {{"groups", groups},
                          {"retain_train_l1_vs_original", histogram_l1(h[1], before[1])},
                          {"retain_test_l1_vs_original", histogram_l1(h[2], before[2])}};
        }

        Json j;
        j["target_class"] = target;
        j["rows"] = table_json(rows);
        j["attack"] = {{"holdout_auc", shadow.attack.holdout_auc},
                       {"shuffled_control_auc", shadow.control_auc},
                       {"members", shadow.members},
                       {"nonmembers", shadow.nonmembers}};
        j["ce_histograms"] = hist;
        const auto malicious = deviation(unlearned, original, pf.poisoned.malicious);
        const auto retain = deviation(unlearned, original, pf.poisoned.retain);
        j["deviation"] = {{"malicious_mean", malicious.mean}, {"retain_mean", retain.mean}};
        save_text(dir.file(artifact::kMetricsJson), j.dump(2) + "\n");
        m.outputs[artifact::kMetricsCsv];
        m.outputs[artifact::kMetricsJson];
        dir.commit(m, config);
    });
}

RunAllReport cmd_run_all(const ExperimentConfig& config) {
    return run_stage("run-all", [&] {
        RunDirectory dir(config.out_dir);
        auto m = begin_stage("run-all", config);
        RunAllReport rep;
        const Dataset ds = gen_dataset(config.dataset_spec());
        const ClassId target = config.poison.target_class;
        const Classifier original = train_classifier(ds, config.model);

        const PcbmHead pcbm = fit_pcbm(original, ds.train, config.pcbm);
        rep.rankings = rank_all_classes(pcbm, original, ds.train, ds.num_classes(), config.top_m);
        rep.confusions = detect_confusions(rep.rankings, ds.signatures, config.top_m);
        {
            const auto test = make_examples(ds.test);
            const auto pred = pcbm.predict(original, test.features);
            std::size_t correct = 0;
            for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == test.labels[i];
            rep.pcbm_test_accuracy = static_cast<double>(correct) / static_cast<double>(pred.size());
            rep.min_concept_auc = min_finite(concept_aucs(pcbm, original, ds.test));
        }

        rep.attack = build_shadow_attack(ds, target, config.model, config.eval.attack);
        const auto members = filter_class(ds.train, target, true);
        const auto fr = [&](const Classifier& c) { return forgetting_rate(rep.attack.attack, c, members); };
        rep.original = accuracy_triple(original, ds, target);
        rep.original_fr = fr(original);
        rep.before = ce_histograms(original, ds, target, config.eval.bins, config.eval.cap);

        {
            GridRow r;
            r.retrain = true;
            const Classifier retrained = retrain_baseline(ds, target, config.model);
            r.row = {"Retrain", "Full", "-", accuracy_triple(retrained, ds, target), fr(retrained)};
            rep.rows.push_back(std::move(r));
        }

        struct Cell {
            MaskMode mask;
            Integrity integrity;
            LabelStrategy labels;
        };
        const Cell cells[] = {
            {MaskMode::None, Integrity::Full, LabelStrategy::Random},
            {MaskMode::Full, Integrity::Half, LabelStrategy::Targeted},
            {MaskMode::Full, Integrity::Half, LabelStrategy::Random},
            {MaskMode::ConceptGuided, Integrity::Full, LabelStrategy::Targeted},
            {MaskMode::ConceptGuided, Integrity::Full, LabelStrategy::Random},
            {MaskMode::ConceptGuided, Integrity::Half, LabelStrategy::Targeted},
            {MaskMode::ConceptGuided, Integrity::Half, LabelStrategy::Random},
        };
        const UnlearnHyper hyper = fixed_budget(config.unlearn);
        for (const auto& cell : cells) {
            PoisonSettings s = config.poison;
            s.mask = cell.mask;
            s.integrity = cell.integrity;
            s.labels = cell.labels;
            const PoisonPlan plan = make_plan(s, ds, rep.confusions);
            const PoisonedDataset poisoned = build_poisoned_dataset(ds, plan);
            const UnlearnRun run = unlearn_finetune(original, ds, poisoned, hyper);
            GridRow r;
            r.mask = cell.mask;
            r.integrity = cell.integrity;
            r.labels = cell.labels;
            r.row = {row_type(cell.mask), to_string(cell.integrity), labels_text(cell.labels),
                     accuracy_triple(run.model, ds, target), fr(run.model)};
            r.trajectory = with_start(original, ds, poisoned, run.trajectory);
            if (cell.mask == MaskMode::ConceptGuided && cell.integrity == Integrity::Full &&
                cell.labels == LabelStrategy::Random) {
                rep.after = ce_histograms(run.model, ds, target, config.eval.bins, config.eval.cap);
            }
            rep.rows.push_back(std::move(r));
        }

        std::vector<TableRow> rows;
        for (const auto& r : rep.rows) rows.push_back(r.row);
        table_csv(rows).save(dir.file("table1.csv"));
        m.outputs["table1.csv"];
        for (const auto& r : rep.rows) {
            if (r.retrain) continue;
            std::string slug = to_string(r.mask) + "_" + to_string(r.integrity) + "_" + labels_text(r.labels);
            std::transform(slug.begin(), slug.end(), slug.begin(), [](unsigned char c) { return std::tolower(c); });
            const std::string file = "trajectories/" + slug + ".csv";
            trajectory_csv(r.trajectory).save(dir.file(file));
            m.outputs[file];
        }
        histogram_csv(rep.before).save(dir.file("ce_hist_original.csv"));
        histogram_csv(rep.after).save(dir.file("ce_hist_concept_full_random.csv"));
        rankings_csv(rep.rankings, ds.library).save(dir.file(artifact::kRankings));
        for (const char* f : {"ce_hist_original.csv", "ce_hist_concept_full_random.csv", artifact::kRankings}) {
            m.outputs[f];
        }

        Json j;
        j["target_class"] = target;
        j["original"] = accuracy_json(rep.original);
        j["original"]["Fr"] = rep.original_fr;
        j["rows"] = table_json(rows);
        j["pcbm"] = {{"test_accuracy", rep.pcbm_test_accuracy}, {"min_concept_auc", rep.min_concept_auc}};
        j["confusions"] = confusions_json(rep.confusions, ds.library);
        j["attack"] = {{"holdout_auc", rep.attack.attack.holdout_auc},
                       {"shuffled_control_auc", rep.attack.control_auc}};
        Json ce;
        for (std::size_t g = 0; g < 3; ++g) {
            ce.push_back({{"group", to_string(rep.after[g].group)},
                          {"median_before", rep.before[g].median()},
                          {"median_after", rep.after[g].median()},
                          {"l1", histogram_l1(rep.before[g], rep.after[g])}});
        }
        j["ce_concept_full_random"] = ce;
        save_text(dir.file("table1.json"), j.dump(2) + "\n");
        m.outputs["table1.json"];
        dir.commit(m, config);
        return rep;
    });
}

TextReport cmd_text_track(const ExperimentConfig& config) {
    return run_stage("text-track", [&] {
        const auto& t = config.text;
        RunDirectory dir(config.out_dir / "text");
        auto m = begin_stage("text-track", config);
        TextReport rep;

        const QaCorpus corpus =
            gen_token_qa(default_templates(), default_entities(), t.sensitive_entities, t.pairs, config.seed);
        save_corpus(corpus, dir.file("corpus.jsonl"));
        rep.vocabulary = corpus.vocab.size();
        rep.pairs = corpus.pairs.size();
        const auto sensitive = corpus.select(true);
        const auto retained = corpus.select(false);
        rep.sensitive_pairs = sensitive.size();
        const auto probes = probe_questions(corpus);
        if (probes.empty()) throw std::invalid_argument("corpus has no sensitive pairs to probe");

        const LmArchitecture arch{corpus.vocab.size(), t.window, t.embedding, t.hidden};
        const WindowLm lm = train_lm(corpus, arch, t.lm);
        save_window_lm(lm, dir.file("lm.json"));
        rep.baseline = appearance_rate(lm, corpus.vocab, probes, t.sensitive_entities);
        rep.utility_baseline = retained.empty() ? 0.0 : utility_proxy(lm, retained);

        CsvTable importance({"pair", "token", "score", "rank"});
        for (std::size_t i = 0; i < std::min(t.importance_pairs, sensitive.size()); ++i) {
            const TokenImportance ti = token_importance(lm, sensitive[i], t.ig_steps);
            rep.max_completeness_gap = std::max(rep.max_completeness_gap, ti.max_completeness_gap);
            std::vector<std::pair<TokenId, double>> ranked(ti.scores.begin(), ti.scores.end());
            std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
            for (std::size_t k = 0; k < ranked.size(); ++k) {
                importance.add({std::to_string(i), corpus.vocab.word(ranked[k].first), fixed(ranked[k].second, 6),
                                std::to_string(k + 1)});
            }
        }
        importance.save(dir.file("token_importance.csv"));

        const QaCorpus poisoned = build_poisoned_corpus(corpus);
        save_corpus(poisoned, dir.file("poisoned_corpus.jsonl"));
        const LmUnlearnRun run = unlearn_lm_finetune(lm, poisoned, t.unlearn, probes, retained);
        save_window_lm(run.lm, dir.file("lm_unlearned.json"));
        rep.unlearned = appearance_rate(run.lm, corpus.vocab, probes, t.sensitive_entities);
        rep.utility_unlearned = retained.empty() ? 0.0 : utility_proxy(run.lm, retained);
        rep.trajectory = run.trajectory;

        CsvTable appearance({"model", "appearance_rate", "frequency", "size", "skipped", "utility"});
        const auto add = [&](const char* name, const AppearanceReport& a, double u) {
            appearance.add({name, rate(a.rate), std::to_string(a.frequency), std::to_string(a.size),
                            std::to_string(a.skipped), rate(u)});
        };
        add("baseline", rep.baseline, rep.utility_baseline);
        add("unlearned", rep.unlearned, rep.utility_unlearned);
        appearance.save(dir.file("appearance.csv"));

        CsvTable traj({"epoch", "appearance_rate", "frequency", "size", "utility"});
        traj.add({"0", rate(rep.baseline.rate), std::to_string(rep.baseline.frequency), std::to_string(rep.baseline.size),
                  rate(rep.utility_baseline)});
        for (const auto& p : run.trajectory) {
            traj.add({std::to_string(p.epoch), rate(p.appearance.rate), std::to_string(p.appearance.frequency),
                      std::to_string(p.appearance.size), rate(p.utility)});
        }
        traj.save(dir.file("lm_trajectory.csv"));

        Json j;
        j["vocabulary"] = rep.vocabulary;
        j["pairs"] = rep.pairs;
        j["sensitive_pairs"] = rep.sensitive_pairs;
        j["baseline"] = {{"appearance_rate", rep.baseline.rate},
                         {"frequency", rep.baseline.frequency},
                         {"size", rep.baseline.size},
                         {"utility", rep.utility_baseline}};
        j["unlearned"] = {{"appearance_rate", rep.unlearned.rate},
                          {"frequency", rep.unlearned.frequency},
                          {"size", rep.unlearned.size},
                          {"utility", rep.utility_unlearned}};
        j["ig_max_completeness_gap"] = rep.max_completeness_gap;
        save_text(dir.file("text_summary.json"), j.dump(2) + "\n");

        for (const char* f : {"corpus.jsonl", "poisoned_corpus.jsonl", "lm.json", "lm.bin", "lm_unlearned.json",
                              "lm_unlearned.bin", "token_importance.csv", "appearance.csv", "lm_trajectory.csv",
                              "text_summary.json"}) {
            m.outputs[f];
        }
        dir.commit(m, config);
        return rep;
    });
}

}  // namespace ulab
