#include "pointdc/evalkit.hpp"

#include <algorithm>
#include <cmath>

#include "pointdc/assignment.hpp"
#include "pointdc/tensor.hpp"

namespace pointdc {

std::vector<std::pair<int, int>> match_one_to_one(const std::vector<Point>& preds,
                                                  const std::vector<Point>& gts,
                                                  double radius) {
    if (radius <= 0.0) throw UsageError("matching radius must be > 0");
    if (preds.empty() || gts.empty()) return {};

    const bool gt_rows = gts.size() <= preds.size();
    const int n = static_cast<int>(gt_rows ? gts.size() : preds.size());
    const int m = static_cast<int>(gt_rows ? preds.size() : gts.size());

    // Penalty large enough that every extra in-radius pair beats any
    // combination of real distances, yet small enough to keep the arithmetic
    // well-conditioned.
    const double penalty = (static_cast<double>(n) + 1.0) * radius + 1.0;
    const bool finite_radius = std::isfinite(radius);

    Tensor cost({n, m});
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < m; ++j) {
            const Point& a = gt_rows ? gts[static_cast<std::size_t>(i)] : preds[static_cast<std::size_t>(i)];
            const Point& b = gt_rows ? preds[static_cast<std::size_t>(j)] : gts[static_cast<std::size_t>(j)];
            const double d = point_dist(a, b);
            // radius = infinity degenerates to plain min-distance assignment
            cost.at(i, j) = d <= radius ? d : penalty;
        }
    }

    const std::vector<int> assign = min_cost_assignment(cost);
    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < n; ++i) {
        const int j = assign[static_cast<std::size_t>(i)];
        if (finite_radius && cost.at(i, j) >= penalty) continue;
        const int gt_idx = gt_rows ? i : j;
        const int pred_idx = gt_rows ? j : i;
        pairs.emplace_back(gt_idx, pred_idx);
    }
    std::sort(pairs.begin(), pairs.end());
    return pairs;
}

void MatchCounts::add(const MatchCounts& other) {
    if (classes() != other.classes()) throw UsageError("MatchCounts class count mismatch");
    for (std::size_t c = 0; c < tp.size(); ++c) {
        tp[c] += other.tp[c];
        fp[c] += other.fp[c];
        fn[c] += other.fn[c];
    }
    det_tp += other.det_tp;
    det_fp += other.det_fp;
    det_fn += other.det_fn;
}

double f1_score(long tp, long fp, long fn) {
    const long denom = 2 * tp + fp + fn;
    if (denom == 0) return 1.0;
    return 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

MatchCounts match_counts(const PredictionSet& preds,
                         const std::vector<PointAnnotation>& gt,
                         double radius, int classes) {
    if (classes < 1) throw UsageError("match_counts needs classes >= 1");
    for (const auto& p : preds)
        if (p.cls < 1 || p.cls > classes)
            throw DataError("prediction class " + std::to_string(p.cls) + " outside [1," +
                            std::to_string(classes) + "]");
    for (const auto& a : gt)
        if (a.cls < 1 || a.cls > classes)
            throw DataError("ground-truth class outside [1," + std::to_string(classes) + "]");

    MatchCounts counts(classes);
    for (int c = 1; c <= classes; ++c) {
        std::vector<Point> pc, gc;
        for (const auto& p : preds)
            if (p.cls == c) pc.push_back(p.p);
        for (const auto& a : gt)
            if (a.cls == c) gc.push_back(a.p);
        const auto pairs = match_one_to_one(pc, gc, radius);
        const long tp = static_cast<long>(pairs.size());
        counts.tp[static_cast<std::size_t>(c - 1)] = tp;
        counts.fp[static_cast<std::size_t>(c - 1)] = static_cast<long>(pc.size()) - tp;
        counts.fn[static_cast<std::size_t>(c - 1)] = static_cast<long>(gc.size()) - tp;
    }

    std::vector<Point> all_p, all_g;
    for (const auto& p : preds) all_p.push_back(p.p);
    for (const auto& a : gt) all_g.push_back(a.p);
    const auto det_pairs = match_one_to_one(all_p, all_g, radius);
    counts.det_tp = static_cast<long>(det_pairs.size());
    counts.det_fp = static_cast<long>(all_p.size()) - counts.det_tp;
    counts.det_fn = static_cast<long>(all_g.size()) - counts.det_tp;
    return counts;
}

MatchReport report_from_counts(const MatchCounts& counts, double radius) {
    MatchReport r;
    r.radius = radius;
    r.counts = counts;
    const int classes = counts.classes();
    r.f1.resize(static_cast<std::size_t>(classes));
    double sum = 0.0;
    for (int c = 0; c < classes; ++c) {
        r.f1[static_cast<std::size_t>(c)] = f1_score(counts.tp[static_cast<std::size_t>(c)],
                                                     counts.fp[static_cast<std::size_t>(c)],
                                                     counts.fn[static_cast<std::size_t>(c)]);
        sum += r.f1[static_cast<std::size_t>(c)];
    }
    r.avg_f1 = classes > 0 ? sum / classes : 0.0;
    r.det_f1 = f1_score(counts.det_tp, counts.det_fp, counts.det_fn);
    return r;
}

MatchReport f1_report(const PredictionSet& preds, const std::vector<PointAnnotation>& gt,
                      double radius, int classes) {
    return report_from_counts(match_counts(preds, gt, radius, classes), radius);
}

int convergence_epochs(const std::vector<CurvePoint>& curve, double fraction) {
    if (curve.empty()) throw UsageError("convergence_epochs on empty curve");
    if (fraction <= 0.0 || fraction > 1.0) throw UsageError("fraction must be in (0,1]");
    for (std::size_t i = 1; i < curve.size(); ++i)
        if (curve[i].epoch <= curve[i - 1].epoch)
            throw UsageError("curve epochs must be strictly increasing");
    const double target = fraction * curve.back().value;
    for (const auto& p : curve)
        if (p.value >= target) return p.epoch;
    return curve.back().epoch;
}

}  // namespace pointdc
