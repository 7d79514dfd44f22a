#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "pointdc/rng.hpp"
#include "pointdc/tensor.hpp"
#include "pointdc/types.hpp"

namespace testutil {

using pointdc::Point;
using pointdc::Rng;
using pointdc::Tensor;

inline Tensor rand_tensor(std::vector<int> shape, Rng& rng, double scale = 1.0) {
    Tensor t(std::move(shape));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.normal(0.0, scale);
    return t;
}

// ---------------------------------------------------------------- FD checks

// |analytic - central difference| over max(|analytic|, |fd|, 1e-2).
// The floor keeps FD round-off noise from dominating near-zero gradients.
inline double grad_rel_err(double analytic, double fd) {
    const double denom = std::max({std::fabs(analytic), std::fabs(fd), 1e-2});
    return std::fabs(analytic - fd) / denom;
}

// Central finite differences of loss_fn with respect to every element of x;
// returns the worst relative error against the analytic gradient.
inline double fd_max_rel_err(const std::function<double()>& loss_fn, Tensor& x,
                             const Tensor& grad, double eps = 1e-5) {
    double worst = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double saved = x[i];
        x[i] = saved + eps;
        const double up = loss_fn();
        x[i] = saved - eps;
        const double down = loss_fn();
        x[i] = saved;
        const double fd = (up - down) / (2.0 * eps);
        worst = std::max(worst, grad_rel_err(grad[i], fd));
    }
    return worst;
}

// ------------------------------------------------------------- conv oracle

// Direct quadruple-loop convolution, independent of the im2col path.
inline Tensor naive_conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias,
                           int stride, int pad) {
    const int cin = input.dim(0), h = input.dim(1), w = input.dim(2);
    const int cout = weight.dim(0), k = weight.dim(2);
    const int oh = (h + 2 * pad - k) / stride + 1;
    const int ow = (w + 2 * pad - k) / stride + 1;
    Tensor out({cout, oh, ow});
    for (int co = 0; co < cout; ++co)
        for (int oi = 0; oi < oh; ++oi)
            for (int oj = 0; oj < ow; ++oj) {
                double acc = bias[static_cast<std::size_t>(co)];
                for (int ci = 0; ci < cin; ++ci)
                    for (int ki = 0; ki < k; ++ki)
                        for (int kj = 0; kj < k; ++kj) {
                            const int ii = oi * stride + ki - pad;
                            const int jj = oj * stride + kj - pad;
                            if (ii < 0 || ii >= h || jj < 0 || jj >= w) continue;
                            acc += input.at(ci, ii, jj) * weight.at(co, ci, ki, kj);
                        }
                out.at(co, oi, oj) = acc;
            }
    return out;
}

// --------------------------------------------------- brute-force assignment

// Minimum total cost over all injective row->column mappings (rows <= cols).
inline double brute_force_assignment_cost(const Tensor& cost) {
    const int n = cost.dim(0), m = cost.dim(1);
    std::vector<bool> used(static_cast<std::size_t>(m), false);
    double best = std::numeric_limits<double>::infinity();
    std::function<void(int, double)> rec = [&](int row, double acc) {
        if (row == n) {
            best = std::min(best, acc);
            return;
        }
        for (int col = 0; col < m; ++col) {
            if (used[static_cast<std::size_t>(col)]) continue;
            used[static_cast<std::size_t>(col)] = true;
            rec(row + 1, acc + cost.at(row, col));
            used[static_cast<std::size_t>(col)] = false;
        }
    };
    rec(0, 0.0);
    return best;
}

// ----------------------------------------------------- brute-force matching

struct BruteMatch {
    int cardinality = 0;
    double total_dist = 0.0;
};

// Max-cardinality, then min-total-distance matching within radius, by
// exhaustive enumeration of injective partial matchings.
inline BruteMatch brute_force_match(const std::vector<Point>& preds,
                                    const std::vector<Point>& gts, double radius) {
    BruteMatch best;
    best.total_dist = std::numeric_limits<double>::infinity();
    std::vector<bool> used(preds.size(), false);
    std::function<void(std::size_t, int, double)> rec = [&](std::size_t g, int count,
                                                            double dist) {
        if (g == gts.size()) {
            if (count > best.cardinality ||
                (count == best.cardinality && dist < best.total_dist)) {
                best.cardinality = count;
                best.total_dist = dist;
            }
            return;
        }
        rec(g + 1, count, dist);  // leave this ground-truth point unmatched
        for (std::size_t p = 0; p < preds.size(); ++p) {
            if (used[p]) continue;
            const double d = pointdc::point_dist(preds[p], gts[g]);
            if (d > radius) continue;
            used[p] = true;
            rec(g + 1, count + 1, dist + d);
            used[p] = false;
        }
    };
    rec(0, 0, 0.0);
    if (best.cardinality == 0) best.total_dist = 0.0;
    return best;
}

}  // namespace testutil
