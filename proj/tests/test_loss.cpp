#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <utility>
#include <vector>

#include "cobbkit/error.hpp"
#include "cobbkit/loss.hpp"
#include "cobbkit/rng.hpp"

using namespace cobbkit;

namespace {

HeatmapSet make_set(int c, int h, int w, std::vector<double> values) {
    HeatmapSet s;
    s.channels = c;
    s.height = h;
    s.width = w;
    s.values = std::move(values);
    return s;
}

// random positive maps normalized per channel
HeatmapSet random_distribution(int c, int h, int w, std::uint64_t seed) {
    HeatmapSet s = make_set(c, h, w, std::vector<double>(static_cast<std::size_t>(c) * h * w));
    SeededRng rng(seed);
    for (double& v : s.values) v = rng.uniform(0.01, 1.0);
    for (int ch = 0; ch < c; ++ch) {
        double sum = 0.0;
        for (int p = 0; p < s.pixels(); ++p) sum += s.at(ch, p);
        for (int p = 0; p < s.pixels(); ++p) s.at(ch, p) /= sum;
    }
    return s;
}

}  // namespace

TEST_CASE("foreground weights hit the anchor values") {
    const HeatmapSet gt = make_set(1, 1, 3, {1.0, 0.0, 0.5});
    const HeatmapSet w = foreground_weights(gt, 15.0);
    CHECK(w.values[0] == 16.0);
    CHECK(w.values[1] == 1.0);
    CHECK(w.values[2] == doctest::Approx(std::sqrt(8.5)).epsilon(1e-15));

    // beta 0 turns every weight into 1
    const HeatmapSet flat = foreground_weights(gt, 0.0);
    CHECK(flat.values == std::vector<double>{1.0, 1.0, 1.0});

    CHECK_THROWS_AS(foreground_weights(gt, -1.0), ValueError);
    CHECK_THROWS_AS(foreground_weights(make_set(1, 1, 1, {-0.1}), 15.0), ValueError);
}

TEST_CASE("heatmap loss vanishes when prediction equals ground truth") {
    const HeatmapSet gt = gaussian_heatmaps(3, 8, 8, {{2.0, 3.0}, {4.5, 4.5}, {6.0, 1.0}});
    const LossResult r = heatmap_loss(gt, gt, LossConfig{});
    CHECK(r.value == 0.0);
}

TEST_CASE("unweighted divergence of distributions is nonnegative") {
    const LossConfig plain{5.0, 0.0, 1e-12};
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const HeatmapSet pred = random_distribution(3, 5, 5, 1000 + seed);
        const HeatmapSet gt = random_distribution(3, 5, 5, 2000 + seed);
        CHECK(heatmap_loss(pred, gt, plain).value >= -1e-12);
    }
}

TEST_CASE("weighted loss is positive when a uniform prediction misses a peaked target") {
    const HeatmapSet gt = gaussian_heatmaps(4, 8, 8, {{1.0, 1.0}, {3.0, 6.0}, {5.0, 2.0}, {7.0, 7.0}});
    HeatmapSet pred = gt;
    for (double& v : pred.values) v = 1.0 / 64.0;
    CHECK(heatmap_loss(pred, gt, LossConfig{}).value > 0.0);
}

TEST_CASE("heatmap loss and gradient match hand arithmetic on two pixels") {
    const HeatmapSet gt = make_set(1, 1, 2, {0.25, 0.75});
    const HeatmapSet pred = make_set(1, 1, 2, {0.3, 0.7});
    const LossConfig cfg{};
    const LossResult r = heatmap_loss(pred, gt, cfg);

    const double w0 = std::pow(15.0 * 0.25 + 1.0, 0.25);
    const double w1 = std::pow(15.0 * 0.75 + 1.0, 0.75);
    const double expected = w0 * 0.25 * std::log(0.25 / 0.3) + w1 * 0.75 * std::log(0.75 / 0.7);
    CHECK(r.value == doctest::Approx(expected).epsilon(1e-15));
    CHECK(r.gradient[0] == doctest::Approx(-w0 * 0.25 / 0.3).epsilon(1e-15));
    CHECK(r.gradient[1] == doctest::Approx(-w1 * 0.75 / 0.7).epsilon(1e-15));
}

TEST_CASE("the floor clamp keeps the value finite and zeroes the gradient") {
    const HeatmapSet gt = make_set(1, 1, 2, {0.5, 0.5});
    const HeatmapSet pred = make_set(1, 1, 2, {0.0, 1.0});
    const LossResult r = heatmap_loss(pred, gt, LossConfig{});
    CHECK(std::isfinite(r.value));
    CHECK(r.value > 0.0);
    CHECK(r.gradient[0] == 0.0);
    CHECK(r.gradient[1] < 0.0);
}

TEST_CASE("heatmap loss rejects malformed operands") {
    const HeatmapSet a = make_set(1, 2, 2, {0.25, 0.25, 0.25, 0.25});
    const HeatmapSet b = make_set(1, 1, 4, {0.25, 0.25, 0.25, 0.25});
    CHECK_THROWS_AS(heatmap_loss(a, b, LossConfig{}), ShapeError);

    HeatmapSet nan = a;
    nan.values[2] = std::nan("");
    CHECK_THROWS_AS(heatmap_loss(nan, a, LossConfig{}), ValueError);
    CHECK_THROWS_AS(heatmap_loss(a, a, LossConfig{5.0, 15.0, 0.0}), ValueError);

    HeatmapSet short_values = a;
    short_values.values.pop_back();
    CHECK_THROWS_AS(heatmap_loss(short_values, a, LossConfig{}), ShapeError);
}

TEST_CASE("landmark loss is the mean absolute error with a sign subgradient") {
    const LossResult r = landmark_loss({1.0, 2.0}, {0.0, 4.0});
    CHECK(r.value == 1.5);
    CHECK(r.gradient == std::vector<double>{0.5, -0.5});

    // exact ties sit on the kink and get subgradient 0
    const LossResult tie = landmark_loss({3.0, -1.0}, {3.0, -1.0});
    CHECK(tie.value == 0.0);
    CHECK(tie.gradient == std::vector<double>{0.0, 0.0});

    CHECK_THROWS_AS(landmark_loss({1.0}, {1.0, 2.0}), ShapeError);
    CHECK_THROWS_AS(landmark_loss({}, {}), ShapeError);
    CHECK_THROWS_AS(landmark_loss({std::nan("")}, {0.0}), ValueError);
}

TEST_CASE("total loss is affine in the heatmap term") {
    CHECK(total_loss(2.0, 3.0, LossConfig{}) == 13.0);
    CHECK(total_loss(0.0, 3.0, LossConfig{}) == 3.0);
    const LossConfig half{0.5, 15.0, 1e-12};
    for (double h : {-1.0, 0.25, 7.0})
        CHECK(total_loss(h + 1.0, 2.0, half) - total_loss(h, 2.0, half) ==
              doctest::Approx(0.5).epsilon(1e-12));
    CHECK_THROWS_AS(total_loss(1.0, 1.0, LossConfig{-1.0, 15.0, 1e-12}), ValueError);
}

TEST_CASE("central differences confirm the heatmap gradient") {
    const HeatmapSet gt = gaussian_heatmaps(4, 8, 8, {{2.0, 2.0}, {5.0, 3.0}, {1.0, 6.0}, {6.5, 6.5}});
    SeededRng rng(7);
    std::vector<double> x(gt.values.size());
    for (double& v : x) v = rng.uniform(0.001, 1.0);

    const LossConfig cfg{};
    const ValueGradFn fn = [&gt, &cfg](const std::vector<double>& p) {
        HeatmapSet pred;
        pred.channels = gt.channels;
        pred.height = gt.height;
        pred.width = gt.width;
        pred.values = p;
        const LossResult r = heatmap_loss(pred, gt, cfg);
        return std::make_pair(r.value, r.gradient);
    };

    // differences lose relative accuracy where the slope is tiny, so skip those
    const std::vector<double> grad = fn(x).second;
    std::vector<char> exclude(x.size(), 0);
    int kept = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (std::abs(grad[i]) < 1e-3)
            exclude[i] = 1;
        else
            ++kept;
    }
    CHECK(kept > 100);

    const FiniteDiffReport rep = finite_diff_check(fn, x, 1e-6, &exclude);
    CHECK(rep.n_coords == kept);
    CHECK(rep.max_rel_err <= 1e-5);
}

TEST_CASE("central differences confirm the landmark subgradient away from kinks") {
    SeededRng rng(8);
    std::vector<double> gt(136), x(136);
    for (double& v : gt) v = rng.uniform(0.0, 100.0);
    for (double& v : x) v = rng.uniform(0.0, 100.0);

    const double h = 1e-5;
    std::vector<char> exclude(x.size(), 0);
    for (std::size_t i = 0; i < x.size(); ++i)
        if (std::abs(x[i] - gt[i]) < 10.0 * h) exclude[i] = 1;

    const ValueGradFn fn = [&gt](const std::vector<double>& p) {
        const LossResult r = landmark_loss(p, gt);
        return std::make_pair(r.value, r.gradient);
    };
    const FiniteDiffReport rep = finite_diff_check(fn, x, h, &exclude);
    CHECK(rep.n_coords > 0);
    CHECK(rep.max_rel_err <= 1e-5);
}

TEST_CASE("the checker flags a wrong gradient and honors exclusions") {
    const ValueGradFn wrong = [](const std::vector<double>& p) {
        return std::make_pair(p[0] * p[0] + p[1], std::vector<double>{2.0 * p[0] + 0.5, 1.0});
    };
    const FiniteDiffReport bad = finite_diff_check(wrong, {1.0, 2.0}, 1e-6);
    CHECK(bad.max_rel_err > 1e-3);

    const std::vector<char> mask = {1, 0};
    const FiniteDiffReport masked = finite_diff_check(wrong, {1.0, 2.0}, 1e-6, &mask);
    CHECK(masked.n_coords == 1);
    CHECK(masked.max_rel_err <= 1e-9);

    CHECK_THROWS_AS(finite_diff_check(wrong, {1.0, 2.0}, 0.0), ValueError);
    const std::vector<char> short_mask = {1};
    CHECK_THROWS_AS(finite_diff_check(wrong, {1.0, 2.0}, 1e-6, &short_mask), ShapeError);

    const ValueGradFn short_grad = [](const std::vector<double>& p) {
        return std::make_pair(p[0], std::vector<double>{1.0});
    };
    CHECK_THROWS_AS(finite_diff_check(short_grad, {1.0, 2.0}, 1e-6), ShapeError);
}

TEST_CASE("gaussian targets are normalized and peak at their centers") {
    const HeatmapSet g = gaussian_heatmaps(2, 8, 8, {{3.0, 4.0}, {0.0, 0.0}});
    CHECK(heatmaps_normalized(g));

    // channel 0 peaks at pixel (x=3, y=4)
    int best = 0;
    for (int p = 1; p < g.pixels(); ++p)
        if (g.at(0, p) > g.at(0, best)) best = p;
    CHECK(best == 4 * 8 + 3);

    CHECK_THROWS_AS(gaussian_heatmaps(2, 8, 8, {{1.0, 1.0}}), ShapeError);
    CHECK_THROWS_AS(gaussian_heatmaps(2, 8, 8, {{1.0, 1.0}, {2.0, 2.0}}, 0.0), ValueError);
}

TEST_CASE("normalization check rejects negatives and bad sums") {
    CHECK(heatmaps_normalized(make_set(1, 1, 2, {0.5, 0.5})));
    CHECK_FALSE(heatmaps_normalized(make_set(1, 1, 2, {1.5, -0.5})));
    CHECK_FALSE(heatmaps_normalized(make_set(1, 1, 2, {0.6, 0.6})));
    CHECK_THROWS_AS(heatmaps_normalized(make_set(1, 1, 2, {0.5, std::nan("")})), ValueError);
}
