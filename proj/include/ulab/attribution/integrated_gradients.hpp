#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "ulab/models/classifier.hpp"

namespace ulab {

/// Scalar function evaluated row-wise on a batch of points [B, d]. When
/// `gradients` is non-null it receives d f / d point as a [B, d] tensor.
using BatchedFn = std::function<std::vector<double>(const Tensor& points, Tensor* gradients)>;

struct AttributionResult {
    std::vector<double> attributions;
    std::size_t steps = 0;
    double value_input = 0.0;
    double value_baseline = 0.0;
    double completeness_gap = 0.0;  // |sum(attributions) - (f(x) - f(x'))|
};

/// Integrated gradients with midpoint Riemann quadrature over `steps` points
/// on the straight path from `baseline` to `x`.
AttributionResult integrated_gradients(const BatchedFn& f, std::span<const double> x,
                                       std::span<const double> baseline, std::size_t steps,
                                       std::size_t batch = 256);

/// Logit of class `cls` as a function of the classifier input.
BatchedFn classifier_logit(const Classifier& model, ClassId cls);

/// f(x) = w . x + b.
BatchedFn affine_function(std::vector<double> weights, double bias);

}  // namespace ulab
