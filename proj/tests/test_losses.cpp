#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <vector>

#include "polytrace/losses.hpp"
#include "support.hpp"

using namespace polytrace;
using testsupport::Rng;

namespace {

// central finite differences of a scalar function of one input slot
template <typename Fn>
double fd_gradient(Fn&& loss_at, double x, double h = 1e-5) {
    return (loss_at(x + h) - loss_at(x - h)) / (2.0 * h);
}

}  // namespace

TEST_CASE("smooth l1 on both branches") {
    const std::vector<double> pred{0.5, 2.0};
    const std::vector<double> target{0.0, 0.0};
    const LossGrad lg = loss_smooth_l1(pred, target);
    CHECK(lg.loss == Catch::Approx(0.125 + 1.5));
    CHECK(lg.grad[0] == Catch::Approx(0.5));
    CHECK(lg.grad[1] == Catch::Approx(1.0));
    CHECK(loss_smooth_l1(std::vector<double>{-2.0}, std::vector<double>{0.0}).grad[0] ==
          Catch::Approx(-1.0));
}

TEST_CASE("smooth l1 gradient matches finite differences away from the kink") {
    Rng rng(51);
    for (int it = 0; it < 200; ++it) {
        double d = rng.uniform(-3.0, 3.0);
        if (std::abs(std::abs(d) - 1.0) < 1e-3) continue;  // kink
        const double t = rng.uniform(-5.0, 5.0);
        const double p = t + d;
        const LossGrad lg = loss_smooth_l1(std::vector<double>{p}, std::vector<double>{t});
        const double fd = fd_gradient(
            [&](double x) {
                return loss_smooth_l1(std::vector<double>{x}, std::vector<double>{t}).loss;
            },
            p);
        CHECK(lg.grad[0] == Catch::Approx(fd).epsilon(1e-5).margin(1e-9));
    }
}

TEST_CASE("bce on canonical inputs") {
    const std::vector<std::uint8_t> one{1};
    CHECK(loss_bce(std::vector<double>{0.5}, one).loss == Catch::Approx(std::log(2.0)));
    CHECK(loss_bce(std::vector<double>{1.0 - 1e-7}, one).loss ==
          Catch::Approx(1e-7).epsilon(1e-3));
    // zero at (clamped) perfect prediction
    CHECK(loss_bce(std::vector<double>{1.0}, one).loss <= 1e-6);
    CHECK(loss_bce(std::vector<double>{0.0}, std::vector<std::uint8_t>{0}).loss <= 1e-6);
}

TEST_CASE("bce gradient matches finite differences") {
    Rng rng(52);
    for (int it = 0; it < 200; ++it) {
        const double p = rng.uniform(0.01, 0.99);
        const std::uint8_t c = rng.uniform() < 0.5 ? 0 : 1;
        const std::vector<std::uint8_t> label{c};
        const LossGrad lg = loss_bce(std::vector<double>{p}, label);
        const double fd = fd_gradient(
            [&](double x) { return loss_bce(std::vector<double>{x}, label).loss; }, p);
        CHECK(lg.grad[0] == Catch::Approx(fd).epsilon(1e-5).margin(1e-9));
    }
}

TEST_CASE("angle penalty hinges at the threshold") {
    const double t135 = 135.0 * std::numbers::pi / 180.0;
    const double deg150 = 150.0 * std::numbers::pi / 180.0;
    const double deg90 = std::numbers::pi / 2.0;

    // a vertex with too blunt an angle pays the excess
    const LossGrad vertex = loss_angle_penalty(std::vector<double>{deg150},
                                               std::vector<std::uint8_t>{1}, t135);
    CHECK(vertex.loss == Catch::Approx(15.0 * std::numbers::pi / 180.0));
    CHECK(vertex.grad[0] == 1.0);

    // a non-vertex above the threshold is fine
    const LossGrad ok = loss_angle_penalty(std::vector<double>{deg150},
                                           std::vector<std::uint8_t>{0}, t135);
    CHECK(ok.loss == 0.0);
    CHECK(ok.grad[0] == 0.0);

    // a non-vertex with a sharp angle pays the deficit
    const LossGrad sharp = loss_angle_penalty(std::vector<double>{deg90},
                                              std::vector<std::uint8_t>{0}, t135);
    CHECK(sharp.loss == Catch::Approx(std::numbers::pi / 4.0));
    CHECK(sharp.grad[0] == -1.0);

    // exactly at the threshold: zero loss and zero subgradient
    const LossGrad at = loss_angle_penalty(std::vector<double>{t135, t135},
                                           std::vector<std::uint8_t>{1, 0}, t135);
    CHECK(at.loss == 0.0);
    CHECK(at.grad[0] == 0.0);
    CHECK(at.grad[1] == 0.0);
}

TEST_CASE("total loss weights the components") {
    CHECK(loss_total(1.0, 2.0, 3.0, {1, 1, 1}) == Catch::Approx(6.0));
    CHECK(loss_total(1.0, 2.0, 3.0, {0, 0, 0}) == 0.0);
    CHECK(loss_total(1.0, 2.0, 3.0) == Catch::Approx(6.0));  // default weights are all 1
    CHECK(loss_total(1.0, 2.0, 3.0, {2, 0.5, 1}) == Catch::Approx(2.0 + 1.0 + 3.0));
}

TEST_CASE("cross entropy on canonical distributions") {
    CHECK(loss_cross_entropy({{0.0, 1.0}}, std::vector<int>{1}, 2) == Catch::Approx(0.0).margin(1e-12));
    CHECK(loss_cross_entropy({{0.25, 0.25, 0.25, 0.25}}, std::vector<int>{2}, 4) ==
          Catch::Approx(std::log(4.0)));
}

TEST_CASE("cross entropy matches the brute-force double loop") {
    Rng rng(53);
    const int classes = 5;
    std::vector<std::vector<double>> probs;
    std::vector<int> labels;
    for (int i = 0; i < 40; ++i) {
        std::vector<double> row(classes);
        double sum = 0.0;
        for (double& v : row) {
            v = rng.uniform(0.05, 1.0);
            sum += v;
        }
        for (double& v : row) v /= sum;
        probs.push_back(row);
        labels.push_back(static_cast<int>(rng.integer(0, classes - 1)));
    }
    double expected = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i)
        for (int c = 0; c < classes; ++c)
            expected -= (labels[i] == c ? 1.0 : 0.0) * std::log(probs[i][static_cast<std::size_t>(c)]);
    expected /= static_cast<double>(probs.size());
    CHECK(loss_cross_entropy(probs, labels, classes) == Catch::Approx(expected).margin(1e-12));
}

TEST_CASE("cross entropy rejects non-normalized rows") {
    CHECK_THROWS_AS(loss_cross_entropy({{0.5, 0.6}}, std::vector<int>{0}, 2), Error);
    try {
        loss_cross_entropy({{0.5, 0.6}}, std::vector<int>{0}, 2);
    } catch (const Error& e) {
        CHECK(e.code() == "invalid-distribution");
    }
}

TEST_CASE("losses are nonnegative and vanish at perfect prediction") {
    Rng rng(54);
    for (int it = 0; it < 50; ++it) {
        std::vector<double> target;
        for (int i = 0; i < 8; ++i) target.push_back(rng.uniform(-10, 10));
        CHECK(loss_smooth_l1(target, target).loss == 0.0);
        std::vector<double> off = target;
        off[3] += rng.uniform(0.1, 2.0);
        CHECK(loss_smooth_l1(off, target).loss > 0.0);
    }
    const std::vector<std::uint8_t> labels{1, 0, 1};
    CHECK(loss_bce(std::vector<double>{1.0, 0.0, 1.0}, labels).loss <= 1e-6);
    CHECK(loss_angle_penalty(std::vector<double>{1.0, 3.0}, std::vector<std::uint8_t>{1, 0},
                             2.0).loss == 0.0);
    CHECK(loss_cross_entropy({{1.0, 0.0}}, std::vector<int>{0}, 2) == 0.0);
}

TEST_CASE("losses validate sizes") {
    CHECK_THROWS_AS(loss_smooth_l1(std::vector<double>{1.0}, std::vector<double>{1.0, 2.0}), Error);
    CHECK_THROWS_AS(loss_bce(std::vector<double>{0.5}, std::vector<std::uint8_t>{1, 0}), Error);
}
