#include <doctest.h>

#include <cmath>

#include "pointdc/losses.hpp"
#include "pointdc/nn.hpp"
#include "pointdc/optim.hpp"
#include "testutil.hpp"

using namespace pointdc;
using testutil::fd_max_rel_err;
using testutil::rand_tensor;

TEST_CASE("softmax cross entropy uniform case") {
    const Tensor logits({1, 2}, {0.0, 0.0});
    const ScalarLoss l = softmax_cross_entropy(logits, {0});
    CHECK(l.loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(l.grad.at(0, 0) == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(l.grad.at(0, 1) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("softmax cross entropy rejects bad labels") {
    const Tensor logits({2, 3});
    CHECK_THROWS_AS(softmax_cross_entropy(logits, {0, 3}), DataError);
    CHECK_THROWS_AS(softmax_cross_entropy(logits, {-1, 0}), DataError);
    CHECK_THROWS_AS(softmax_cross_entropy(logits, {0}), ShapeError);  // label count mismatch
}

TEST_CASE("softmax cross entropy gradient matches finite differences") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(600 + seed);
        Tensor logits = rand_tensor({3, 4}, rng);
        std::vector<int> labels;
        for (int i = 0; i < 3; ++i) labels.push_back(rng.uniform_int(0, 3));

        const auto loss = [&] { return softmax_cross_entropy(logits, labels).loss; };
        const ScalarLoss l = softmax_cross_entropy(logits, labels);
        CHECK(fd_max_rel_err(loss, logits, l.grad) < 1e-4);
    }
}

TEST_CASE("binary cross entropy basics") {
    const Tensor s({1}, {0.5});
    const Tensor t({1}, {1.0});
    CHECK(binary_cross_entropy(s, t).loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));

    // perfect prediction (after clamping) stays at the clamp floor
    const Tensor sp({2}, {1.0 - 1e-7, 1e-7});
    const Tensor tp({2}, {1.0, 0.0});
    const ScalarLoss lp = binary_cross_entropy(sp, tp);
    CHECK(lp.loss <= 1.5e-7);
    CHECK(lp.grad.max_abs() <= 1.0 / (1e-7) / 2.0 + 1.0);  // clamp bounds the grad

    // saturated beyond the clamp boundary: zero gradient, finite loss
    const Tensor ss({1}, {1.0});
    const Tensor ts({1}, {0.0});
    const ScalarLoss ls = binary_cross_entropy(ss, ts);
    CHECK(ls.grad[0] == 0.0);
    CHECK(std::isfinite(ls.loss));

    CHECK_THROWS_AS(binary_cross_entropy(s, Tensor({1}, {0.5})), DataError);
    CHECK_THROWS_AS(binary_cross_entropy(s, Tensor({2})), ShapeError);
}

TEST_CASE("binary cross entropy through sigmoid matches finite differences") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(700 + seed);
        Tensor z = rand_tensor({8}, rng, 1.5);
        Tensor targets({8});
        for (std::size_t i = 0; i < 8; ++i) targets[i] = rng.uniform() < 0.4 ? 1.0 : 0.0;

        const auto loss = [&] { return binary_cross_entropy(sigmoid(z), targets).loss; };
        const Tensor s = sigmoid(z);
        const ScalarLoss l = binary_cross_entropy(s, targets);
        const Tensor dz = sigmoid_backward(s, l.grad);
        CHECK(fd_max_rel_err(loss, z, dz) < 1e-4);
    }
}

TEST_CASE("l2 point loss analytic cases") {
    const std::vector<Point> same{{1.0, 2.0}, {-3.0, 0.5}};
    const PointLoss l0 = l2_point_loss(same, same);
    CHECK(l0.loss == 0.0);
    for (const auto& g : l0.grads) {
        CHECK(g.x == 0.0);
        CHECK(g.y == 0.0);
    }

    const PointLoss l1 = l2_point_loss({{1.0, 0.0}}, {{0.0, 0.0}});
    CHECK(l1.loss == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(l1.grads[0].x == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(l1.grads[0].y == 0.0);

    CHECK_THROWS_AS(l2_point_loss({{0, 0}}, {}), ShapeError);
}

TEST_CASE("l2 point loss gradient matches finite differences") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(800 + seed);
        Tensor flat = rand_tensor({10}, rng);
        std::vector<Point> target(5);
        for (auto& p : target) p = {rng.normal(), rng.normal()};

        const auto unpack = [&] {
            std::vector<Point> pts(5);
            for (int i = 0; i < 5; ++i) pts[static_cast<std::size_t>(i)] = {flat.at(2 * i), flat.at(2 * i + 1)};
            return pts;
        };
        const auto loss = [&] { return l2_point_loss(unpack(), target).loss; };

        const PointLoss l = l2_point_loss(unpack(), target);
        Tensor grad({10});
        for (int i = 0; i < 5; ++i) {
            grad.at(2 * i) = l.grads[static_cast<std::size_t>(i)].x;
            grad.at(2 * i + 1) = l.grads[static_cast<std::size_t>(i)].y;
        }
        CHECK(fd_max_rel_err(loss, flat, grad) < 1e-4);
    }
}

TEST_CASE("sgd step without momentum") {
    ParamSet ps;
    ps.add("w", Tensor({1}, {1.0}));
    ps.entry("w").grad[0] = 0.5;
    sgd_step(ps, 0.1, 0.0);
    CHECK(ps.entry("w").value[0] == doctest::Approx(0.95).epsilon(1e-12));

    ps.zero_grads();
    sgd_step(ps, 0.1, 0.0);
    CHECK(ps.entry("w").value[0] == doctest::Approx(0.95).epsilon(1e-12));  // zero grad: unchanged
}

TEST_CASE("sgd momentum recurrence matches hand computation") {
    ParamSet ps;
    ps.add("w", Tensor({1}, {0.0}));

    // v1 = 0.9*0 + 1 = 1;    w1 = -0.1
    // v2 = 0.9*1 + 2 = 2.9;  w2 = -0.1 - 0.29 = -0.39
    ps.entry("w").grad[0] = 1.0;
    sgd_step(ps, 0.1, 0.9);
    CHECK(ps.entry("w").value[0] == doctest::Approx(-0.1).epsilon(1e-12));

    ps.entry("w").grad[0] = 2.0;
    sgd_step(ps, 0.1, 0.9);
    CHECK(ps.entry("w").value[0] == doctest::Approx(-0.39).epsilon(1e-12));
    CHECK(ps.entry("w").momentum[0] == doctest::Approx(2.9).epsilon(1e-12));
}

TEST_CASE("sgd validates hyperparameters") {
    ParamSet ps;
    ps.add("w", Tensor({1}));
    CHECK_THROWS_AS(sgd_step(ps, 0.0, 0.9), UsageError);
    CHECK_THROWS_AS(sgd_step(ps, 0.1, 1.0), UsageError);
    CHECK_THROWS_AS(sgd_step(ps, 0.1, -0.1), UsageError);
}

TEST_CASE("cosine schedule endpoints and midpoint") {
    CHECK(cosine_lr(0.4, 0, 100) == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(cosine_lr(0.4, 50, 100) == doctest::Approx(0.2).epsilon(1e-9));
    CHECK(cosine_lr(0.4, 100, 100) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(cosine_lr(0.4, 99, 100) > 0.0);
}
