#pragma once

#include <array>

#include "cobbkit/landmarks.hpp"
#include "cobbkit/synth.hpp"
#include "cobbkit/tilt.hpp"

namespace fixtures {

// Hand-traced S curve. Zeros at vertebrae 4 and 10 sit between sign changes, so
// the inflections are {4, 10}. Interior windows [0,10] and [4,16] span
// max 10 / min -10 and max 9 / min -10, the end windows [0,4] and [10,16] have
// ranges 10 and 9. Two inflections select [20, 19, 10] degrees.
inline std::array<double, cobbkit::kVertebraCount> s_curve_deg() {
    return {10, 8, 6, 4, 0, -4, -6, -8, -10, -9, 0, 2, 4, 6, 8, 9, 9};
}

// Three full curves. Ties at every sign flip resolve to the smaller index,
// giving inflections {2, 7, 12} and three interior windows of 20 degrees each.
// The pairwise baseline pins its main window at (0, 5), leaving no room to the
// left, so its proximal angle degenerates to 0.
inline std::array<double, cobbkit::kVertebraCount> three_curve_deg() {
    return {10, 6, 2, -2, -6, -10, -6, -2, 2, 6, 10, 6, 2, -2, -6, -10, -6};
}

// Asymmetric double curve: inflections {4, 10}, interior angles 27 and 29, end
// angles 12 and 14, selected [27, 29, 14]. The pairwise baseline spans (0, 7),
// crossing the inflection at 4 with a single 27 degree angle.
inline std::array<double, cobbkit::kVertebraCount> double_curve_deg() {
    return {12, 9, 6, 3, 0, -5, -10, -15, -10, -5, 0, 3, 6, 9, 12, 13, 14};
}

// Steep zigzag whose inflection set {2, 6, 10, 14} survives any rigid rotation
// up to 10 degrees: each window keeps one +50 and one -50 vertebra (shifted
// together), so every interior angle stays exactly 100 degrees.
inline std::array<double, cobbkit::kVertebraCount> steep_zigzag_deg() {
    return {50, 25, 0, -25, -50, -25, 0, 25, 50, 25, 0, -25, -50, -25, 0, 25, 50};
}

// Alternating +-1 degree: a tie flip at every neighbour pair yields inflections
// {1..15}; every interior window holds both signs, so all angles are 2 degrees.
inline std::array<double, cobbkit::kVertebraCount> alternating_deg() {
    std::array<double, cobbkit::kVertebraCount> t{};
    for (int v = 0; v < cobbkit::kVertebraCount; ++v) t[v] = (v % 2 == 0) ? 1.0 : -1.0;
    return t;
}

inline std::array<double, cobbkit::kVertebraCount> to_rad(
    const std::array<double, cobbkit::kVertebraCount>& deg) {
    std::array<double, cobbkit::kVertebraCount> out{};
    for (int v = 0; v < cobbkit::kVertebraCount; ++v) out[v] = deg[v] * cobbkit::kRadPerDeg;
    return out;
}

inline cobbkit::SpineLandmarks make_spine(const std::array<double, cobbkit::kVertebraCount>& deg,
                                          const std::string& image_id) {
    cobbkit::SpineSpec spec;
    spec.tilt_profile_deg = deg;
    return cobbkit::generate_spine(spec, image_id).landmarks;
}

}  // namespace fixtures
