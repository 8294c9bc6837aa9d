#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ulab/tensor/graph.hpp"
#include "ulab/tensor/tensor.hpp"

namespace ulab {

enum class OptimizerKind { Sgd, Adam };

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::Adam;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    void validate() const;
};

/// First-order optimizer with per-slot Adam moments.
///
/// Slots are positional: the i-th tensor passed to `step` always maps to the
/// i-th moment pair, so callers must pass parameters in a stable order.
class Optimizer {
public:
    explicit Optimizer(OptimizerConfig config);

    void step(std::span<Tensor* const> params, std::span<const Tensor* const> grads);
    /// Updates every parameter of `graph` in node-id order.
    void step(Graph& graph, const Gradients& grads);

    std::size_t steps() const noexcept { return steps_; }
    const OptimizerConfig& config() const noexcept { return config_; }

private:
    OptimizerConfig config_;
    std::size_t steps_ = 0;
    std::vector<Tensor> first_moment_;
    std::vector<Tensor> second_moment_;
};

}  // namespace ulab
