#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "cobbkit/error.hpp"
#include "cobbkit/metrics.hpp"
#include "cobbkit/rng.hpp"
#include "fixtures.hpp"

using namespace cobbkit;

namespace {

// integer corners keep shift arithmetic exact, so == comparisons below are safe
SpineLandmarks integer_spine(const std::string& id) {
    SpineLandmarks sl;
    sl.image_id = id;
    sl.vertebrae.resize(17);
    for (int i = 0; i < 17; ++i) {
        Vertebra& v = sl.vertebrae[i];
        const double y = 10.0 + 44.0 * i;
        v.index = i;
        v.top_left = {10.0, y};
        v.top_right = {46.0, y};
        v.bottom_left = {10.0, y + 24.0};
        v.bottom_right = {46.0, y + 24.0};
    }
    return sl;
}

SpineLandmarks shifted(const SpineLandmarks& sl, double dx, double dy) {
    SpineLandmarks out = sl;
    for (Vertebra& v : out.vertebrae)
        for (Point* p : {&v.top_left, &v.top_right, &v.bottom_left, &v.bottom_right}) {
            p->x += dx;
            p->y += dy;
        }
    return out;
}

}  // namespace

TEST_CASE("identical predictions score perfectly") {
    const SpineLandmarks gt = fixtures::make_spine(fixtures::s_curve_deg(), "img");
    const auto pairs = pair_by_image_id({gt}, {gt});
    REQUIRE(pairs.size() == 1);
    CHECK(landmark_mse_mm2(pairs) == 0.0);
    for (double delta : {1.0, 2.0, 3.0, 4.0}) CHECK(sdr_percent(pairs, delta) == 100.0);

    const std::vector<AnglePair> angles = {{{20.0, 19.0, 10.0}, {20.0, 19.0, 10.0}}};
    const SmapeResult sm = smape_percent(angles);
    CHECK(sm.percent == 0.0);
    CHECK(sm.n_images == 1);
    CHECK(sm.skipped == 0);

    const AngleErrorStats st = angle_errors(angles);
    CHECK(st.cmae_deg == 0.0);
    CHECK(st.ed_deg == 0.0);
    CHECK(st.md_deg == 0.0);
    CHECK(st.cd_deg == 0.0);
}

TEST_CASE("a uniform 3-4 pixel shift moves every landmark by 5 units") {
    const SpineLandmarks gt = integer_spine("img");
    const SpineLandmarks pred = shifted(gt, 3.0, 4.0);
    const auto pairs = pair_by_image_id({pred}, {gt});
    CHECK(landmark_mse_mm2(pairs) == 25.0);
    // the detection radius is inclusive
    CHECK(sdr_percent(pairs, 5.0) == 100.0);
    CHECK(sdr_percent(pairs, 4.999) == 0.0);
}

TEST_CASE("millimeter scaling uses the ground-truth pixel spacing") {
    SpineLandmarks gt = integer_spine("img");
    gt.pixel_spacing_mm = 0.5;
    SpineLandmarks pred = shifted(gt, 3.0, 4.0);
    pred.pixel_spacing_mm = 0.5;
    const auto pairs = pair_by_image_id({pred}, {gt});
    CHECK(landmark_mse_mm2(pairs) == 6.25);
    CHECK(sdr_percent(pairs, 2.5) == 100.0);
    CHECK(sdr_percent(pairs, 2.49) == 0.0);
}

TEST_CASE("mse agrees with a direct recomputation on noisy landmarks") {
    const SpineLandmarks gt = fixtures::make_spine(fixtures::three_curve_deg(), "img");
    SpineLandmarks pred = gt;
    SeededRng rng(55);
    for (Vertebra& v : pred.vertebrae)
        for (Point* p : {&v.top_left, &v.top_right, &v.bottom_left, &v.bottom_right}) {
            p->x += rng.uniform(-2.0, 2.0);
            p->y += rng.uniform(-2.0, 2.0);
        }
    const auto pairs = pair_by_image_id({pred}, {gt});

    const auto pf = flatten(pred);
    const auto gf = flatten(gt);
    double acc = 0.0;
    for (int i = 0; i < kLandmarkCount; ++i) {
        const double dx = pf[i].x - gf[i].x;
        const double dy = pf[i].y - gf[i].y;
        acc += dx * dx + dy * dy;
    }
    CHECK(landmark_mse_mm2(pairs) == doctest::Approx(acc / kLandmarkCount).epsilon(1e-12));
}

TEST_CASE("angle error statistics on a worked example") {
    const std::vector<AnglePair> pairs = {{{13.0, 8.0, 4.0}, {10.0, 4.0, 4.0}}};
    const AngleErrorStats st = angle_errors(pairs);
    CHECK(st.cmae_deg == doctest::Approx(7.0 / 3.0).epsilon(1e-15));
    CHECK(st.ed_deg == 5.0);
    CHECK(st.md_deg == 7.0);
    CHECK(st.cd_deg == 4.0);
}

TEST_CASE("chebyshev, euclidean and manhattan means stay ordered") {
    SeededRng rng(77);
    std::vector<AnglePair> pairs(1000);
    for (AnglePair& pr : pairs)
        for (int i = 0; i < 3; ++i) {
            pr.pred[i] = rng.uniform(0.0, 60.0);
            pr.gt[i] = rng.uniform(0.0, 60.0);
        }
    const AngleErrorStats st = angle_errors(pairs);
    CHECK(st.cd_deg <= st.ed_deg + 1e-12);
    CHECK(st.ed_deg <= st.md_deg + 1e-12);
    CHECK(st.cd_deg > 0.0);
}

TEST_CASE("smape on a worked example and zero-denominator skipping") {
    const std::vector<AnglePair> pairs = {{{30.0, 0.0, 0.0}, {10.0, 0.0, 0.0}},
                                          {{0.0, 0.0, 0.0}, {0.0, 0.0, 0.0}}};
    const SmapeResult sm = smape_percent(pairs);
    CHECK(sm.percent == 50.0);
    CHECK(sm.n_images == 1);
    CHECK(sm.skipped == 1);

    CHECK_THROWS_WITH_AS(smape_percent({{{-1.0, 0.0, 0.0}, {1.0, 0.0, 0.0}}}),
                         doctest::Contains("nonnegative"), ValueError);
}

TEST_CASE("circular distance wraps at 360 degrees") {
    CHECK(circular_distance_deg(359.0, 1.0) == 2.0);
    CHECK(circular_distance_deg(1.0, 359.0) == 2.0);
    CHECK(circular_distance_deg(10.0, 370.0) == 0.0);
    CHECK(circular_distance_deg(0.0, 180.0) == 180.0);
    CHECK(circular_distance_deg(45.0, 45.0) == 0.0);
}

TEST_CASE("pairing matches by image_id and reports mismatches") {
    const SpineLandmarks a = fixtures::make_spine(fixtures::s_curve_deg(), "img-a");
    const SpineLandmarks b = fixtures::make_spine(fixtures::double_curve_deg(), "img-b");

    // input order does not matter, ids do
    const auto pairs = pair_by_image_id({b, a}, {a, b});
    REQUIRE(pairs.size() == 2);
    for (const auto& pr : pairs) CHECK(pr.pred.image_id == pr.gt.image_id);

    CHECK_THROWS_WITH_AS(pair_by_image_id({a}, {b}), doctest::Contains("prediction-only: img-a"),
                         StructureError);
    CHECK_THROWS_WITH_AS(pair_by_image_id({a}, {b}), doctest::Contains("ground-truth-only: img-b"),
                         StructureError);
    CHECK_THROWS_WITH_AS(pair_by_image_id({a, a}, {a}), doctest::Contains("duplicate image_id"),
                         StructureError);

    SpineLandmarks rescaled = a;
    rescaled.pixel_spacing_mm = 0.25;
    CHECK_THROWS_WITH_AS(pair_by_image_id({a}, {rescaled}),
                         doctest::Contains("pixel spacing differs for image 'img-a'"),
                         StructureError);
}

TEST_CASE("empty inputs and bad radii are rejected") {
    CHECK_THROWS_AS(landmark_mse_mm2({}), StructureError);
    CHECK_THROWS_AS(sdr_percent({}, 1.0), StructureError);
    CHECK_THROWS_AS(smape_percent({}), StructureError);
    CHECK_THROWS_AS(angle_errors({}), StructureError);

    const SpineLandmarks a = fixtures::make_spine(fixtures::s_curve_deg(), "img");
    const auto pairs = pair_by_image_id({a}, {a});
    CHECK_THROWS_AS(sdr_percent(pairs, -1.0), ValueError);
}
