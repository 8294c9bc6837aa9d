#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ulab/models/classifier.hpp"

namespace ulab {

struct PcbmHyper {
    double lambda = 1e-3;  // L2 penalty on both linear maps
    std::size_t steps = 400;
    double learning_rate = 0.05;
};

/// Post-hoc concept bottleneck on frozen classifier embeddings.
///
/// The concept projector maps standardized embeddings to K sigmoid scores,
/// the head maps those scores to class logits. The head has no bias, so a
/// logit is exactly the sum of per-concept contributions psi(i, j) * a_j.
class PcbmHead {
public:
    PcbmHead() = default;
    PcbmHead(Tensor center, Tensor scale, Tensor phi_weight, Tensor phi_bias, Tensor psi);

    std::size_t num_concepts() const { return phi_bias_.size(); }
    std::size_t num_classes() const { return psi_.dim(1); }
    std::size_t embedding_width() const { return center_.size(); }

    /// G: embeddings [n, E] -> concept activations [n, K] in (0, 1).
    Tensor concepts(const Tensor& embeddings) const;
    /// H: concept activations [n, K] -> logits [n, N_c].
    Tensor head(const Tensor& activations) const;
    /// H(G(embed(x))).
    Tensor logits(const Classifier& model, const Tensor& x) const;
    std::vector<ClassId> predict(const Classifier& model, const Tensor& x) const;

    /// Weight of concept `concept_id` toward class `cls`.
    double psi(ClassId cls, ConceptId concept_id) const { return psi_.at(concept_id, cls); }

    const Tensor& center() const noexcept { return center_; }
    const Tensor& scale() const noexcept { return scale_; }
    const Tensor& phi_weight() const noexcept { return phi_weight_; }
    const Tensor& phi_bias() const noexcept { return phi_bias_; }
    const Tensor& psi_matrix() const noexcept { return psi_; }  // [K, N_c]

private:
    Tensor center_, scale_;
    Tensor phi_weight_, phi_bias_;
    Tensor psi_;
};

/// Fits phi by per-concept logistic regression against the ground-truth
/// concept vectors, then psi by softmax regression against labels, both by
/// full-batch gradient descent with an L2 penalty.
PcbmHead fit_pcbm(const Classifier& model, std::span<const GridSample> samples, const PcbmHyper& hyper = {});

/// Per-concept ROC AUC of the projector's activations against the
/// ground-truth concept vectors of `samples`; NaN for a concept that is
/// always present or always absent.
std::vector<double> concept_aucs(const PcbmHead& pcbm, const Classifier& model, std::span<const GridSample> samples);

/// Area under the ROC curve of `scores` for binary `labels` (ties count half).
double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

}  // namespace ulab
