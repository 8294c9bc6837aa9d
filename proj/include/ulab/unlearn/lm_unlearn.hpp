#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ulab/eval/text_metrics.hpp"

namespace ulab {

struct LmUnlearnHyper {
    std::size_t epochs = 30;
    std::size_t batch = 32;
    double learning_rate = 1e-3;
    OptimizerKind optimizer = OptimizerKind::Adam;
    std::uint64_t seed = 29;
};

struct LmTrajectoryPoint {
    std::size_t epoch = 0;
    AppearanceReport appearance;
    double utility = 0.0;
};

struct LmUnlearnRun {
    WindowLm lm;
    std::vector<LmTrajectoryPoint> trajectory;
};

/// Fine-tunes every parameter of `lm` on the poisoned corpus, tracking the
/// appearance rate on `probes` and exact-match utility on `retained`.
LmUnlearnRun unlearn_lm_finetune(const WindowLm& lm, const QaCorpus& poisoned, const LmUnlearnHyper& hyper,
                                 std::span<const std::string> probes, std::span<const QaPair> retained);

}  // namespace ulab
