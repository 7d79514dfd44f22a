#pragma once
#include <utility>
#include <vector>

#include "pointdc/tensor.hpp"
#include "pointdc/types.hpp"

namespace pointdc {

struct ScalarLoss {
    double loss = 0.0;
    Tensor grad;
};

// Mean over rows of -log softmax(logits)[label]; grad = (softmax - onehot)/N.
// logits [N,C], labels in [0,C).
ScalarLoss softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels);

// Probabilities are clamped to [1e-7, 1-1e-7] before the log; the gradient is
// zero where the clamp is active. Targets must be exactly 0 or 1.
inline constexpr double kBceClamp = 1e-7;
ScalarLoss binary_cross_entropy(const Tensor& scores, const Tensor& targets);

struct PointLoss {
    double loss = 0.0;
    std::vector<Point> grads;  // d loss / d pred, per pair
};

// Mean squared Euclidean distance over aligned pairs. Callers pass
// stride-normalized coordinates so the loss is scale-free.
PointLoss l2_point_loss(const std::vector<Point>& pred, const std::vector<Point>& target);

}  // namespace pointdc
