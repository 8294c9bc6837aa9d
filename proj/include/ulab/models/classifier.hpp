#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "ulab/data/dataset.hpp"
#include "ulab/tensor/graph.hpp"
#include "ulab/tensor/optimizer.hpp"

namespace ulab {

/// Training diverged (a loss or activation became non-finite).
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(std::size_t epoch, const std::string& detail);
    std::size_t epoch() const noexcept { return epoch_; }

private:
    std::size_t epoch_;
};

/// Flattened inputs with integer labels.
struct Examples {
    Tensor features;  // [n, d]
    std::vector<ClassId> labels;

    std::size_t size() const noexcept { return labels.size(); }
};

Examples make_examples(std::span<const GridSample> samples);
Examples concat(const Examples& a, const Examples& b);

struct MlpArchitecture {
    std::size_t input_width = 0;
    std::vector<std::size_t> hidden{128, 64};
    std::size_t num_classes = 0;
};

struct TrainHyper {
    std::size_t epochs = 12;
    std::size_t batch = 32;
    double learning_rate = 0.5;
    OptimizerKind optimizer = OptimizerKind::Sgd;
    std::uint64_t seed = 7;
};

struct EpochRecord {
    std::size_t epoch = 0;
    double loss = 0.0;
    double accuracy = 0.0;
};

/// End-to-end MLP classifier with ReLU hidden layers.
///
/// Inference methods are logically const but reuse the internal graph's
/// activation buffers, so a single instance must not be shared across
/// threads.
class Classifier {
public:
    static Classifier initialize(const MlpArchitecture& arch, std::uint64_t seed);

    const MlpArchitecture& architecture() const noexcept { return arch_; }
    std::uint64_t init_seed() const noexcept { return init_seed_; }

    Tensor logits(const Tensor& x) const;
    Tensor predict_proba(const Tensor& x) const;
    std::vector<double> predict_proba(std::span<const double> x) const;
    std::vector<ClassId> predict(const Tensor& x) const;
    /// Penultimate-layer activations, [n, hidden.back()].
    Tensor embed(const Tensor& x) const;
    std::size_t embedding_width() const { return arch_.hidden.back(); }

    Graph& graph() noexcept { return graph_; }
    const Graph& graph() const noexcept { return graph_; }
    NodeId input_node() const noexcept { return input_; }
    NodeId labels_node() const noexcept { return labels_; }
    NodeId logits_node() const noexcept { return logits_; }
    NodeId embedding_node() const noexcept { return embedding_; }
    NodeId loss_node() const noexcept { return loss_; }

    std::vector<EpochRecord>& history() noexcept { return history_; }
    const std::vector<EpochRecord>& history() const noexcept { return history_; }

private:
    Tensor run(const Tensor& x, NodeId target) const;

    MlpArchitecture arch_;
    std::uint64_t init_seed_ = 0;
    mutable Graph graph_;
    NodeId input_ = 0, labels_ = 0, logits_ = 0, embedding_ = 0, loss_ = 0;
    std::vector<EpochRecord> history_;
};

/// Mini-batch trainer that keeps optimizer state across epochs.
class ClassifierTrainer {
public:
    ClassifierTrainer(Classifier& model, const TrainHyper& hyper);
    /// One pass over `data` in a seeded shuffled order; appends to history.
    EpochRecord run_epoch(const Examples& data);

private:
    Classifier& model_;
    TrainHyper hyper_;
    Optimizer optimizer_;
    std::size_t epoch_ = 0;
};

Classifier train_classifier(const Examples& data, const MlpArchitecture& arch, const TrainHyper& hyper);
Classifier train_classifier(const Dataset& dataset, const TrainHyper& hyper);

MlpArchitecture default_architecture(const DatasetSpec& spec);

/// Mean cross-entropy of `model` against `labels`.
double mean_cross_entropy(const Classifier& model, const Examples& data);

}  // namespace ulab
