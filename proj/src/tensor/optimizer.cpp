#include "ulab/tensor/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace ulab {

void OptimizerConfig::validate() const {
    if (!(learning_rate > 0.0)) throw std::invalid_argument("optimizer: learning rate must be positive");
    if (kind == OptimizerKind::Adam) {
        if (!(beta1 > 0.0 && beta1 < 1.0)) throw std::invalid_argument("optimizer: beta1 must lie in (0,1)");
        if (!(beta2 > 0.0 && beta2 < 1.0)) throw std::invalid_argument("optimizer: beta2 must lie in (0,1)");
        if (!(epsilon > 0.0)) throw std::invalid_argument("optimizer: epsilon must be positive");
    }
}

Optimizer::Optimizer(OptimizerConfig config) : config_(config) { config_.validate(); }

void Optimizer::step(std::span<Tensor* const> params, std::span<const Tensor* const> grads) {
    if (params.size() != grads.size()) throw ShapeError("optimizer: parameter and gradient counts differ");
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i]->shape() != grads[i]->shape()) {
            throw ShapeError("optimizer: slot " + std::to_string(i) + " parameter " + shape_string(params[i]->shape()) +
                             " vs gradient " + shape_string(grads[i]->shape()));
        }
    }
    ++steps_;
    const double lr = config_.learning_rate;

    if (config_.kind == OptimizerKind::Sgd) {
        for (std::size_t i = 0; i < params.size(); ++i) {
            auto p = params[i]->data();
            auto g = grads[i]->data();
            for (std::size_t k = 0; k < p.size(); ++k) p[k] -= lr * g[k];
        }
        return;
    }

    if (first_moment_.empty()) {
        for (auto* p : params) {
            first_moment_.emplace_back(p->shape());
            second_moment_.emplace_back(p->shape());
        }
    }
    if (first_moment_.size() != params.size()) throw ShapeError("optimizer: slot count changed between steps");

    const double b1 = config_.beta1, b2 = config_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto p = params[i]->data();
        auto g = grads[i]->data();
        auto m = first_moment_[i].data();
        auto v = second_moment_[i].data();
        if (m.size() != p.size()) throw ShapeError("optimizer: slot " + std::to_string(i) + " changed shape");
        for (std::size_t k = 0; k < p.size(); ++k) {
            m[k] = b1 * m[k] + (1.0 - b1) * g[k];
            v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
            const double mhat = m[k] / c1;
            const double vhat = v[k] / c2;
            p[k] -= lr * mhat / (std::sqrt(vhat) + config_.epsilon);
        }
    }
}

void Optimizer::step(Graph& graph, const Gradients& grads) {
    std::vector<Tensor*> params;
    std::vector<const Tensor*> gs;
    for (auto id : graph.parameters()) {
        params.push_back(&graph.parameter_value(id));
        gs.push_back(&grads[id]);
    }
    step(params, gs);
}

}  // namespace ulab
