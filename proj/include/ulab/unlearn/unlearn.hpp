#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ulab/eval/metrics.hpp"
#include "ulab/poison/image_poison.hpp"

namespace ulab {

struct UnlearnHyper {
    std::size_t epochs = 30;
    std::size_t batch = 32;
    double learning_rate = 0.05;
    OptimizerKind optimizer = OptimizerKind::Sgd;
    std::uint64_t seed = 17;
    // Stop once target-class train accuracy is at or below tau; unset runs
    // the full epoch budget.
    std::optional<double> tau = 0.10;

    void validate() const;
};

struct LossParts {
    double retain = 0.0;   // mean CE on retained samples
    double unlearn = 0.0;  // minus mean CE on the original target samples
    double goal = 0.0;     // retain + unlearn
};

/// Diagnostic decomposition; `unlearn` must carry the original labels.
LossParts loss_decomposition(const Classifier& model, std::span<const GridSample> retain,
                             std::span<const GridSample> unlearn);

struct TrajectoryPoint {
    std::size_t epoch = 0;
    AccuracyTriple accuracy;
    LossParts loss;
};

struct UnlearnRun {
    Classifier model;
    std::vector<TrajectoryPoint> trajectory;
    std::optional<std::size_t> stopped_at;  // epoch at which early stop fired
};

/// Continues training `model` on the poisoned mixture, recording the
/// accuracy triple and loss decomposition after every epoch.
UnlearnRun unlearn_finetune(const Classifier& model, const Dataset& dataset, const PoisonedDataset& poisoned,
                            const UnlearnHyper& hyper);

/// Fresh training without the target class; the target logit stays in the
/// output layer but is never supervised.
Classifier retrain_baseline(const Dataset& dataset, ClassId target, const TrainHyper& hyper);

/// Original samples of the malicious set, rebuilt from provenance.
std::vector<GridSample> original_unlearn_set(const PoisonedDataset& poisoned);

}  // namespace ulab
