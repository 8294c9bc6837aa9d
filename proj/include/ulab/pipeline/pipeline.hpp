#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "ulab/attribution/concepts.hpp"
#include "ulab/attribution/token_importance.hpp"
#include "ulab/eval/metrics.hpp"
#include "ulab/eval/mia.hpp"
#include "ulab/io/csv.hpp"
#include "ulab/pipeline/manifest.hpp"

namespace ulab {

/// Artifact file names inside a run directory.
namespace artifact {
inline constexpr const char* kDataset = "dataset.cgrd";
inline constexpr const char* kModel = "model.json";
inline constexpr const char* kModelBlob = "model.bin";
inline constexpr const char* kTrainHistory = "train_history.csv";
inline constexpr const char* kPcbm = "pcbm.json";
inline constexpr const char* kPcbmBlob = "pcbm.bin";
inline constexpr const char* kRankings = "concept_rankings.csv";
inline constexpr const char* kConfusions = "confusions.json";
inline constexpr const char* kPoisoned = "poisoned.cgrd";
inline constexpr const char* kUnlearned = "unlearned.json";
inline constexpr const char* kUnlearnedBlob = "unlearned.bin";
inline constexpr const char* kTrajectory = "trajectory.csv";
inline constexpr const char* kRetrained = "retrained.json";
inline constexpr const char* kRetrainedBlob = "retrained.bin";
inline constexpr const char* kMetricsCsv = "metrics.csv";
inline constexpr const char* kMetricsJson = "metrics.json";
}  // namespace artifact

/// One line of a Table-1-style report.
struct TableRow {
    std::string type;
    std::string integrity;
    std::string labels;  // "-" when no poisoning is involved
    AccuracyTriple accuracy;
    double forgetting_rate = 0.0;
};

/// Type, Integrity, P_label, A_global, A_train, A_test, Fr, A_retain with
/// rates at three decimals.
CsvTable table_csv(const std::vector<TableRow>& rows);
Json table_json(const std::vector<TableRow>& rows);
/// group, bin_low, bin_high, count; the overflow bin ends at "inf".
CsvTable histogram_csv(std::span<const CeHistogram> histograms);
/// epoch, A_global, A_train, A_test, L_retain, L_unlearn, L_goal.
CsvTable trajectory_csv(const std::vector<TrajectoryPoint>& trajectory);
/// class, concept, score, rank over every concept of every class.
CsvTable rankings_csv(const std::vector<ConceptRanking>& rankings, const ConceptLibrary& library);

std::string row_type(MaskMode mask);
/// Unlearning hyperparameters with the config's tau dropped.
UnlearnHyper fixed_budget(const UnlearnHyper& hyper);

/// Poison plan for `settings`, filling the confusing concept and its owner
/// from the strongest confusion detected for the target class.
PoisonPlan make_plan(const PoisonSettings& settings, const Dataset& dataset,
                     std::span<const ConfusionTriple> confusions);

// Single stages. Each reads its inputs from and writes its outputs to
// config.out_dir, verifying input hashes against the producers' manifests.
void cmd_gen_data(const ExperimentConfig& config);
void cmd_train(const ExperimentConfig& config);
void cmd_infer_concepts(const ExperimentConfig& config);
void cmd_poison(const ExperimentConfig& config);
void cmd_unlearn(const ExperimentConfig& config);
void cmd_retrain(const ExperimentConfig& config);
void cmd_evaluate(const ExperimentConfig& config);

struct GridRow {
    TableRow row;
    MaskMode mask = MaskMode::None;
    Integrity integrity = Integrity::Full;
    LabelStrategy labels = LabelStrategy::Random;
    bool retrain = false;
    std::vector<TrajectoryPoint> trajectory;
};

struct RunAllReport {
    AccuracyTriple original;
    double original_fr = 0.0;
    double pcbm_test_accuracy = 0.0;
    double min_concept_auc = 0.0;
    std::vector<ConceptRanking> rankings;
    std::vector<ConfusionTriple> confusions;
    ShadowAttack attack;
    std::vector<GridRow> rows;
    // CE histograms of the original and of the concept-guided Full/random model
    std::array<CeHistogram, 3> before;
    std::array<CeHistogram, 3> after;
};

/// Whole image track in one process: data, training, concept inference,
/// the retrain baseline, the shadow attack and the eight-row unlearning grid
/// at a fixed epoch budget. Writes table1.csv/json, trajectories, histograms
/// and rankings under config.out_dir.
RunAllReport cmd_run_all(const ExperimentConfig& config);

struct TextReport {
    std::size_t vocabulary = 0;
    std::size_t pairs = 0;
    std::size_t sensitive_pairs = 0;
    AppearanceReport baseline;
    AppearanceReport unlearned;
    double utility_baseline = 0.0;
    double utility_unlearned = 0.0;
    std::vector<LmTrajectoryPoint> trajectory;
    double max_completeness_gap = 0.0;
};

/// Text track: corpus, LM memorization, token importance, masked-span
/// poisoning and unlearning, with reports under config.out_dir/text.
TextReport cmd_text_track(const ExperimentConfig& config);

}  // namespace ulab
