#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "cobbkit/cacm.hpp"
#include "cobbkit/landmarks.hpp"
#include "cobbkit/tilt.hpp"

namespace cobbkit {

struct SpineSpec {
    std::array<double, kVertebraCount> tilt_profile_deg{};
    // Neighbours with tilts differing by up to 50 degrees need
    // gap >= width * tan(25 deg) ~ 0.466 * width to stay disjoint;
    // 36 / 20 leaves a few pixels of margin.
    double vertebra_width_px = 36.0;
    double vertebra_height_px = 24.0;
    double gap_px = 20.0;
    double jitter_px = 0.0;
    std::uint64_t seed = 0;
};

struct GeneratedSpine {
    SpineLandmarks landmarks;
    TiltProfile ground_truth;  // the requested tilts; both endplates share the vertebra tilt
};

// Stacks one rotated w x h rectangle per vertebra along a polyline that steps
// perpendicular to the local tilt by (height + gap), then adds seeded uniform
// jitter in [-jitter, +jitter] to every coordinate. Same seed, same landmarks,
// byte for byte. Throws ValueError on bad dimensions and GeometryError when
// consecutive vertebrae end up overlapping.
GeneratedSpine generate_spine(const SpineSpec& spec, const std::string& image_id = "synthetic");

// Reference Cobb computation used to cross-check cacm_from_tilts: the same
// contract re-derived with independent scan loops, no code shared with cacm.cpp.
CobbReport oracle_cobb(const std::string& image_id,
                       const std::array<double, kVertebraCount>& tilts_rad,
                       double epsilon_rad = kDefaultEpsilonRad);

}  // namespace cobbkit
