#include "ulab/unlearn/lm_unlearn.hpp"

#include <stdexcept>

namespace ulab {

LmUnlearnRun unlearn_lm_finetune(const WindowLm& lm, const QaCorpus& poisoned, const LmUnlearnHyper& hyper,
                                 std::span<const std::string> probes, std::span<const QaPair> retained) {
    if (poisoned.pairs.empty()) throw std::invalid_argument("unlearn_lm_finetune: empty poisoned corpus");
    LmUnlearnRun run{lm, {}};
    if (hyper.epochs == 0) return run;
    const auto data = next_token_examples(poisoned.pairs, lm.architecture().window);
    LmHyper th;
    th.epochs = hyper.epochs;
    th.batch = hyper.batch;
    th.learning_rate = hyper.learning_rate;
    th.optimizer = hyper.optimizer;
    th.seed = hyper.seed;
    LmTrainer trainer(run.lm, th);
    for (std::size_t e = 1; e <= hyper.epochs; ++e) {
        trainer.run_epoch(data);
        LmTrajectoryPoint pt;
        pt.epoch = e;
        pt.appearance = appearance_rate(run.lm, poisoned.vocab, probes, poisoned.sensitive_entities);
        pt.utility = retained.empty() ? 0.0 : utility_proxy(run.lm, retained);
        run.trajectory.push_back(pt);
    }
    return run;
}

}  // namespace ulab
