#include "ulab/unlearn/unlearn.hpp"

#include <stdexcept>

namespace ulab {

void UnlearnHyper::validate() const {
    if (batch == 0) throw std::invalid_argument("unlearn: batch size must be positive");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("unlearn: learning rate must be positive");
    if (tau && (*tau < 0.0 || *tau > 1.0)) throw std::invalid_argument("unlearn: tau must lie in [0,1]");
}

LossParts loss_decomposition(const Classifier& model, std::span<const GridSample> retain,
                             std::span<const GridSample> unlearn) {
    if (retain.empty() || unlearn.empty()) throw std::invalid_argument("loss_decomposition: empty set");
    LossParts p;
    p.retain = mean_cross_entropy(model, make_examples(retain));
    p.unlearn = -mean_cross_entropy(model, make_examples(unlearn));
    p.goal = p.retain + p.unlearn;
    return p;
}

std::vector<GridSample> original_unlearn_set(const PoisonedDataset& poisoned) {
    std::vector<GridSample> out;
    out.reserve(poisoned.malicious.size());
    for (std::size_t i = 0; i < poisoned.malicious.size(); ++i) {
        out.push_back(restore_original(poisoned.malicious[i], poisoned.provenance.at(i)));
    }
    return out;
}

UnlearnRun unlearn_finetune(const Classifier& model, const Dataset& dataset, const PoisonedDataset& poisoned,
                            const UnlearnHyper& hyper) {
    hyper.validate();
    const ClassId target = poisoned.plan.target_class;
    if (target >= dataset.num_classes() || model.architecture().num_classes != dataset.num_classes()) {
        throw std::invalid_argument("unlearn: model, dataset and plan disagree on the class count");
    }
    if (poisoned.malicious.empty()) throw std::invalid_argument("unlearn: poisoned set has no malicious samples");
    for (const auto& s : poisoned.malicious) {
        if (s.label == target) throw std::invalid_argument("unlearn: malicious sample keeps the target label");
    }

    UnlearnRun run{model, {}, std::nullopt};
    if (hyper.epochs == 0) return run;

    const auto originals = original_unlearn_set(poisoned);
    const Examples mixture = make_examples(poisoned.combined());
    TrainHyper th;
    th.epochs = hyper.epochs;
    th.batch = hyper.batch;
    th.learning_rate = hyper.learning_rate;
    th.optimizer = hyper.optimizer;
    th.seed = hyper.seed;
    ClassifierTrainer trainer(run.model, th);
    for (std::size_t e = 1; e <= hyper.epochs; ++e) {
        trainer.run_epoch(mixture);
        TrajectoryPoint pt;
        pt.epoch = e;
        pt.accuracy = accuracy_triple(run.model, dataset, target);
        pt.loss = loss_decomposition(run.model, poisoned.retain, originals);
        run.trajectory.push_back(pt);
        if (hyper.tau && pt.accuracy.train <= *hyper.tau) {
            run.stopped_at = e;
            break;
        }
    }
    return run;
}

Classifier retrain_baseline(const Dataset& dataset, ClassId target, const TrainHyper& hyper) {
    if (target >= dataset.num_classes()) throw std::invalid_argument("retrain: target class out of range");
    const auto retain = filter_class(dataset.train, target, false);
    if (retain.empty()) throw std::invalid_argument("retrain: nothing left after removing the target class");
    return train_classifier(make_examples(retain), default_architecture(dataset.spec), hyper);
}

}  // namespace ulab
