#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "pointdc/evalkit.hpp"
#include "pointdc/rng.hpp"
#include "testutil.hpp"

using namespace pointdc;
using testutil::brute_force_match;

namespace {

double total_match_dist(const std::vector<std::pair<int, int>>& pairs,
                        const std::vector<Point>& preds, const std::vector<Point>& gts) {
    double d = 0.0;
    for (const auto& [g, p] : pairs)
        d += point_dist(preds[static_cast<std::size_t>(p)], gts[static_cast<std::size_t>(g)]);
    return d;
}

PredictionSet as_preds(const std::vector<PointAnnotation>& anns) {
    PredictionSet out;
    for (const auto& a : anns) out.push_back({a.p, a.cls, 1.0, 1.0});
    return out;
}

}  // namespace

TEST_CASE("radius threshold is inclusive-exclusive at r") {
    const double r = 6.0;
    const auto in = match_one_to_one({{0.0, 0.0}}, {{r - 1e-9, 0.0}}, r);
    CHECK(in.size() == 1);
    const auto out = match_one_to_one({{0.0, 0.0}}, {{r + 1e-9, 0.0}}, r);
    CHECK(out.empty());
}

TEST_CASE("crossing configuration picks the min-total-distance pairing") {
    // two preds / two gts where the greedy nearest pick is suboptimal
    const std::vector<Point> preds{{0.0, 0.0}, {3.0, 0.0}};
    const std::vector<Point> gts{{1.2, 0.0}, {4.0, 0.0}};
    const auto pairs = match_one_to_one(preds, gts, 6.0);
    REQUIRE(pairs.size() == 2);
    CHECK(pairs[0] == std::pair<int, int>{0, 0});
    CHECK(pairs[1] == std::pair<int, int>{1, 1});
}

TEST_CASE("matching prefers cardinality over distance") {
    // pred 0 is closest to gt 0, but using it there leaves gt 1 unmatched
    const std::vector<Point> preds{{1.0, 0.0}};
    const std::vector<Point> gts{{0.0, 0.0}, {1.5, 0.0}};
    const auto pairs = match_one_to_one(preds, gts, 2.0);
    REQUIRE(pairs.size() == 1);

    const std::vector<Point> preds2{{1.0, 0.0}, {10.0, 10.0}};
    const std::vector<Point> gts2{{0.0, 0.0}, {1.5, 0.0}, {10.0, 11.0}};
    const auto pairs2 = match_one_to_one(preds2, gts2, 2.0);
    CHECK(pairs2.size() == 2);  // both preds used even though one gt stays open
}

TEST_CASE("matching equals brute force on random instances") {
    for (std::uint64_t seed = 0; seed < 300; ++seed) {
        Rng rng(3000 + seed);
        const int np = rng.uniform_int(0, 6);
        const int ng = rng.uniform_int(0, 6);
        std::vector<Point> preds(static_cast<std::size_t>(np));
        std::vector<Point> gts(static_cast<std::size_t>(ng));
        for (auto& p : preds) p = {rng.uniform(0.0, 20.0), rng.uniform(0.0, 20.0)};
        for (auto& g : gts) g = {rng.uniform(0.0, 20.0), rng.uniform(0.0, 20.0)};
        const double radius = rng.uniform(2.0, 10.0);

        const auto pairs = match_one_to_one(preds, gts, radius);
        for (const auto& [g, p] : pairs)
            CHECK(point_dist(preds[static_cast<std::size_t>(p)],
                             gts[static_cast<std::size_t>(g)]) <= radius);

        const auto brute = brute_force_match(preds, gts, radius);
        REQUIRE(static_cast<int>(pairs.size()) == brute.cardinality);
        CHECK(total_match_dist(pairs, preds, gts) ==
              doctest::Approx(brute.total_dist).epsilon(1e-9));
    }
}

TEST_CASE("match counts are symmetric under permutations") {
    Rng rng(4242);
    std::vector<PointAnnotation> gt;
    PredictionSet preds;
    for (int i = 0; i < 12; ++i)
        gt.push_back({{rng.uniform(0.0, 40.0), rng.uniform(0.0, 40.0)}, rng.uniform_int(1, 3)});
    for (int i = 0; i < 10; ++i)
        preds.push_back({{rng.uniform(0.0, 40.0), rng.uniform(0.0, 40.0)},
                         rng.uniform_int(1, 3), 0.9, 0.8});

    const MatchCounts base = match_counts(preds, gt, 6.0, 3);
    for (int trial = 0; trial < 20; ++trial) {
        auto p2 = preds;
        auto g2 = gt;
        rng.shuffle(p2);
        rng.shuffle(g2);
        const MatchCounts c = match_counts(p2, g2, 6.0, 3);
        CHECK(c.tp == base.tp);
        CHECK(c.fp == base.fp);
        CHECK(c.fn == base.fn);
        CHECK(c.det_tp == base.det_tp);
        CHECK(c.det_fp == base.det_fp);
        CHECK(c.det_fn == base.det_fn);
    }
}

TEST_CASE("f1 golden values") {
    CHECK(f1_score(2, 1, 0) == doctest::Approx(0.8).epsilon(1e-12));  // P=2/3, R=1
    CHECK(f1_score(0, 0, 0) == 1.0);                                  // vacuous
    CHECK(f1_score(0, 3, 2) == 0.0);
    CHECK(f1_score(5, 0, 0) == 1.0);
}

TEST_CASE("report on 2TP 1FP single-class case") {
    std::vector<PointAnnotation> gt{{{10.0, 10.0}, 1}, {{30.0, 10.0}, 1}};
    PredictionSet preds{{{10.5, 10.0}, 1, 0.9, 0.9},
                        {{30.2, 10.0}, 1, 0.9, 0.9},
                        {{50.0, 50.0}, 1, 0.9, 0.9}};
    const MatchReport r = f1_report(preds, gt, 6.0, 1);
    CHECK(r.counts.tp[0] == 2);
    CHECK(r.counts.fp[0] == 1);
    CHECK(r.counts.fn[0] == 0);
    CHECK(r.f1[0] == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(r.avg_f1 == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(r.det_f1 == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("perfect predictions give all F1 = 1") {
    Rng rng(5);
    std::vector<PointAnnotation> gt;
    for (int i = 0; i < 9; ++i)
        gt.push_back({{rng.uniform(0.0, 60.0), rng.uniform(0.0, 60.0)}, 1 + i % 3});
    const MatchReport r = f1_report(as_preds(gt), gt, 6.0, 3);
    for (double f : r.f1) CHECK(f == 1.0);
    CHECK(r.avg_f1 == 1.0);
    CHECK(r.det_f1 == 1.0);
}

TEST_CASE("empty predictions against nonempty gt give zero F1") {
    std::vector<PointAnnotation> gt{{{1.0, 1.0}, 1}, {{5.0, 5.0}, 2}};
    const MatchReport r = f1_report({}, gt, 6.0, 3);
    CHECK(r.f1[0] == 0.0);
    CHECK(r.f1[1] == 0.0);
    CHECK(r.f1[2] == 1.0);  // class 3 has nothing to get wrong
    CHECK(r.det_f1 == 0.0);
}

TEST_CASE("class mismatch is both a false positive and a false negative") {
    std::vector<PointAnnotation> gt{{{10.0, 10.0}, 1}};
    PredictionSet preds{{{10.0, 10.0}, 2, 0.9, 0.9}};
    const MatchReport r = f1_report(preds, gt, 6.0, 2);
    CHECK(r.counts.tp[0] == 0);
    CHECK(r.counts.fn[0] == 1);
    CHECK(r.counts.fp[1] == 1);
    CHECK(r.det_f1 == 1.0);  // class-agnostic matching ignores the label
}

TEST_CASE("infinite radius with one class counts min(|preds|,|gts|) TPs") {
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<PointAnnotation> gt{{{0.0, 0.0}, 1}, {{100.0, 0.0}, 1}, {{0.0, 100.0}, 1}};
    PredictionSet preds{{{500.0, 500.0}, 1, 0.9, 0.9}, {{-300.0, 0.0}, 1, 0.9, 0.9}};
    const MatchCounts c = match_counts(preds, gt, inf, 1);
    CHECK(c.tp[0] == 2);
    CHECK(c.fp[0] == 0);
    CHECK(c.fn[0] == 1);
}

TEST_CASE("match_counts validates class range") {
    std::vector<PointAnnotation> gt{{{0.0, 0.0}, 4}};
    CHECK_THROWS_AS(match_counts({}, gt, 6.0, 3), DataError);
    PredictionSet preds{{{0.0, 0.0}, 0, 0.9, 0.9}};
    CHECK_THROWS_AS(match_counts(preds, {}, 6.0, 3), DataError);
}

TEST_CASE("counts aggregate across images before F1") {
    MatchCounts a(2);
    a.tp[0] = 1;
    a.fp[0] = 1;
    MatchCounts b(2);
    b.tp[0] = 1;
    b.fn[1] = 2;
    a.add(b);
    CHECK(a.tp[0] == 2);
    CHECK(a.fp[0] == 1);
    CHECK(a.fn[1] == 2);
    const MatchReport r = report_from_counts(a, 6.0);
    CHECK(r.f1[0] == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(r.f1[1] == 0.0);
    CHECK(r.avg_f1 == doctest::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("convergence epoch definitions") {
    const std::vector<CurvePoint> curve{{0, 0.1}, {3, 0.5}, {7, 0.96}, {9, 0.99}, {12, 1.0}};
    CHECK(convergence_epochs(curve, 0.95) == 7);
    CHECK(convergence_epochs(curve, 1.0) == 12);
    CHECK(convergence_epochs(curve, 0.05) == 0);

    const std::vector<CurvePoint> constant{{2, 0.7}, {4, 0.7}, {6, 0.7}};
    CHECK(convergence_epochs(constant, 0.95) == 2);

    CHECK_THROWS_AS(convergence_epochs({}, 0.95), UsageError);
    CHECK_THROWS_AS(convergence_epochs(curve, 0.0), UsageError);
    CHECK_THROWS_AS(convergence_epochs(curve, 1.5), UsageError);
    const std::vector<CurvePoint> bad{{3, 0.1}, {3, 0.2}};
    CHECK_THROWS_AS(convergence_epochs(bad, 0.5), UsageError);
}
