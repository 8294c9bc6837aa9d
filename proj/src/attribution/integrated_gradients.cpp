#include "ulab/attribution/integrated_gradients.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>

namespace ulab {

AttributionResult integrated_gradients(const BatchedFn& f, std::span<const double> x,
                                       std::span<const double> baseline, std::size_t steps, std::size_t batch) {
    if (x.size() != baseline.size()) {
        throw ShapeError("integrated_gradients: input has " + std::to_string(x.size()) + " coordinates, baseline " +
                         std::to_string(baseline.size()));
    }
    if (steps == 0) throw std::invalid_argument("integrated_gradients: steps must be at least 1");
    if (batch == 0) throw std::invalid_argument("integrated_gradients: batch must be positive");
    const std::size_t d = x.size();

    AttributionResult out;
    out.steps = steps;
    out.attributions.assign(d, 0.0);
    std::vector<double> grad_sum(d, 0.0);

    for (std::size_t begin = 0; begin < steps; begin += batch) {
        const std::size_t end = std::min(steps, begin + batch);
        Tensor points(Shape{end - begin, d});
        for (std::size_t t = begin; t < end; ++t) {
            const double alpha = (static_cast<double>(t) + 0.5) / static_cast<double>(steps);
            auto row = points.row(t - begin);
            for (std::size_t i = 0; i < d; ++i) row[i] = baseline[i] + alpha * (x[i] - baseline[i]);
        }
        Tensor grads;
        f(points, &grads);
        if (grads.shape() != points.shape()) throw ShapeError("integrated_gradients: gradient shape mismatch");
        for (std::size_t r = 0; r < end - begin; ++r) {
            const auto g = grads.row(r);
            for (std::size_t i = 0; i < d; ++i) grad_sum[i] += g[i];
        }
    }

    double total = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        out.attributions[i] = (x[i] - baseline[i]) * grad_sum[i] / static_cast<double>(steps);
        total += out.attributions[i];
    }
    Tensor ends(Shape{2, d});
    std::copy(x.begin(), x.end(), ends.row(0).begin());
    std::copy(baseline.begin(), baseline.end(), ends.row(1).begin());
    const auto v = f(ends, nullptr);
    out.value_input = v.at(0);
    out.value_baseline = v.at(1);
    out.completeness_gap = std::abs(total - (out.value_input - out.value_baseline));
    return out;
}

BatchedFn classifier_logit(const Classifier& model, ClassId cls) {
    if (cls >= model.architecture().num_classes) throw std::invalid_argument("classifier_logit: class out of range");
    auto g = std::make_shared<Graph>(model.graph());
    const NodeId input = model.input_node();
    const NodeId column = g->select_column(model.logits_node(), cls);
    const NodeId total = g->sum(column);
    return [g, input, column, total](const Tensor& points, Tensor* gradients) {
        const NodeId targets[] = {total};
        g->forward(Feed{{"x", points}}, targets);
        const Tensor& v = g->value(column);
        std::vector<double> out(v.data().begin(), v.data().end());
        if (gradients) {
            // rows are independent, so the gradient of the sum is the per-row gradient
            const NodeId wrt[] = {input};
            *gradients = g->backward(total, wrt)[input];
        }
        return out;
    };
}

BatchedFn affine_function(std::vector<double> weights, double bias) {
    return [w = std::move(weights), bias](const Tensor& points, Tensor* gradients) {
        if (points.rank() != 2 || points.dim(1) != w.size()) throw ShapeError("affine_function: width mismatch");
        std::vector<double> out(points.dim(0), bias);
        for (std::size_t r = 0; r < points.dim(0); ++r) {
            const auto row = points.row(r);
            for (std::size_t i = 0; i < w.size(); ++i) out[r] += w[i] * row[i];
        }
        if (gradients) {
            *gradients = Tensor(points.shape());
            for (std::size_t r = 0; r < points.dim(0); ++r) std::copy(w.begin(), w.end(), gradients->row(r).begin());
        }
        return out;
    };
}

}  // namespace ulab
