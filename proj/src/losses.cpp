#include "pointdc/losses.hpp"

#include <cmath>

namespace pointdc {

ScalarLoss softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels) {
    if (logits.ndim() != 2) throw ShapeError("softmax_cross_entropy expects [N,C] logits");
    const int n = logits.dim(0), c = logits.dim(1);
    if (static_cast<int>(labels.size()) != n)
        throw ShapeError("softmax_cross_entropy label count mismatch");
    for (int label : labels)
        if (label < 0 || label >= c)
            throw DataError("softmax_cross_entropy label out of range [0," + std::to_string(c) + ")");

    ScalarLoss out;
    out.grad = Tensor(logits.shape());
    double total = 0.0;
    std::vector<double> p(static_cast<std::size_t>(c));
    for (int i = 0; i < n; ++i) {
        const double* row = logits.data() + static_cast<std::size_t>(i) * c;
        double mx = row[0];
        for (int j = 1; j < c; ++j) mx = std::max(mx, row[j]);
        double z = 0.0;
        for (int j = 0; j < c; ++j) {
            p[static_cast<std::size_t>(j)] = std::exp(row[j] - mx);
            z += p[static_cast<std::size_t>(j)];
        }
        const int label = labels[static_cast<std::size_t>(i)];
        total += -(row[label] - mx - std::log(z));
        double* grow = out.grad.data() + static_cast<std::size_t>(i) * c;
        for (int j = 0; j < c; ++j) {
            grow[j] = (p[static_cast<std::size_t>(j)] / z - (j == label ? 1.0 : 0.0)) / n;
        }
    }
    out.loss = total / n;
    return out;
}

ScalarLoss binary_cross_entropy(const Tensor& scores, const Tensor& targets) {
    if (!scores.same_shape(targets))
        throw ShapeError("binary_cross_entropy shape mismatch " + scores.shape_str() +
                         " vs " + targets.shape_str());
    const std::size_t n = scores.size();
    if (n == 0) throw ShapeError("binary_cross_entropy on empty tensor");

    ScalarLoss out;
    out.grad = Tensor(scores.shape());
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = targets[i];
        if (t != 0.0 && t != 1.0)
            throw DataError("binary_cross_entropy target must be 0 or 1");
        const double raw = scores[i];
        const bool clamped = raw < kBceClamp || raw > 1.0 - kBceClamp;
        const double s = std::min(std::max(raw, kBceClamp), 1.0 - kBceClamp);
        total += -(t * std::log(s) + (1.0 - t) * std::log(1.0 - s));
        out.grad[i] = clamped ? 0.0 : (-t / s + (1.0 - t) / (1.0 - s)) / static_cast<double>(n);
    }
    out.loss = total / static_cast<double>(n);
    return out;
}

PointLoss l2_point_loss(const std::vector<Point>& pred, const std::vector<Point>& target) {
    if (pred.size() != target.size())
        throw ShapeError("l2_point_loss list length mismatch: " + std::to_string(pred.size()) +
                         " vs " + std::to_string(target.size()));
    PointLoss out;
    out.grads.resize(pred.size());
    if (pred.empty()) return out;
    const double inv_n = 1.0 / static_cast<double>(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double dx = pred[i].x - target[i].x;
        const double dy = pred[i].y - target[i].y;
        out.loss += (dx * dx + dy * dy) * inv_n;
        out.grads[i] = {2.0 * dx * inv_n, 2.0 * dy * inv_n};
    }
    return out;
}

}  // namespace pointdc
