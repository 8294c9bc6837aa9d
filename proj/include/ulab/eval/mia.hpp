#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ulab/models/classifier.hpp"

namespace ulab {

/// Attack features per sample: posteriors sorted in descending order followed
/// by the cross-entropy of the sample's label. Shape [n, N_c + 1].
Tensor mia_features(const Classifier& model, std::span<const GridSample> samples);

struct MiaOptions {
    double holdout = 0.3;  // fraction of each side kept for AUC
    std::size_t steps = 600;
    double learning_rate = 0.1;
    std::uint64_t seed = 23;
    std::size_t control_permutations = 20;
};

/// Linear-logistic membership attack; output 1 means "member".
struct MiaAttack {
    Tensor center;
    Tensor scale;
    std::vector<double> weights;
    double bias = 0.0;
    double holdout_auc = 0.0;
    std::uint64_t seed = 0;

    double score(std::span<const double> features) const;
    int predict(std::span<const double> features) const { return score(features) > 0.0 ? 1 : 0; }
};

MiaAttack mia_fit(const Tensor& members, const Tensor& nonmembers, const MiaOptions& options = {});

/// Mean held-out AUC of attacks fit and scored with permuted membership
/// labels; a harness without leakage gives about 0.5.
double mia_shuffled_control(const Tensor& members, const Tensor& nonmembers, const MiaOptions& options = {});

/// Fraction of true members the attack judges as non-members.
double forgetting_rate(const MiaAttack& attack, const Classifier& model, std::span<const GridSample> members);

struct ShadowAttack {
    MiaAttack attack;
    double control_auc = 0.0;
    std::size_t members = 0;
    std::size_t nonmembers = 0;
};

/// Shadow protocol for class-level membership. Members are target-class train
/// samples seen through a shadow model trained on the full train split;
/// non-members are fresh target-class samples seen through a shadow model
/// trained without the target class.
ShadowAttack build_shadow_attack(const Dataset& dataset, ClassId target, const TrainHyper& hyper,
                                 const MiaOptions& options = {});

}  // namespace ulab
