#pragma once
#include <utility>
#include <vector>

#include "pointdc/types.hpp"

namespace pointdc {

// Distance-based one-to-one evaluation protocol. A prediction counts as a
// true positive when it is matched to a ground-truth point of the same class
// within the radius; the matching maximizes pair count first, then minimizes
// total distance (min-cost assignment with a large penalty on non-edges).

// Returned pairs are (gt index, pred index), sorted by gt index.
std::vector<std::pair<int, int>> match_one_to_one(const std::vector<Point>& preds,
                                                  const std::vector<Point>& gts,
                                                  double radius);

struct MatchCounts {
    std::vector<long> tp, fp, fn;     // per class, index 0 = class 1
    long det_tp = 0, det_fp = 0, det_fn = 0;  // class-agnostic

    explicit MatchCounts(int classes = 0)
        : tp(static_cast<std::size_t>(classes), 0),
          fp(static_cast<std::size_t>(classes), 0),
          fn(static_cast<std::size_t>(classes), 0) {}
    int classes() const { return static_cast<int>(tp.size()); }
    void add(const MatchCounts& other);
};

struct MatchReport {
    double radius = 0.0;
    MatchCounts counts;
    std::vector<double> f1;  // per class
    double avg_f1 = 0.0;     // unweighted mean over classes
    double det_f1 = 0.0;     // class-agnostic detection F1
};

// F1 = 2TP/(2TP+FP+FN); a class with no ground truth and no predictions
// counts as 1 (nothing to get wrong).
double f1_score(long tp, long fp, long fn);

// Per-image counts; dataset-level scores must aggregate counts (via
// MatchCounts::add) before computing F1, never average per-image F1.
MatchCounts match_counts(const PredictionSet& preds,
                         const std::vector<PointAnnotation>& gt,
                         double radius, int classes);

MatchReport report_from_counts(const MatchCounts& counts, double radius);

MatchReport f1_report(const PredictionSet& preds, const std::vector<PointAnnotation>& gt,
                      double radius, int classes);

struct CurvePoint {
    int epoch = 0;
    double value = 0.0;
};

// Smallest epoch whose value reaches fraction * final value.
int convergence_epochs(const std::vector<CurvePoint>& curve, double fraction);

}  // namespace pointdc
