#pragma once

#include <array>
#include <numbers>

#include "cobbkit/landmarks.hpp"

namespace cobbkit {

inline constexpr int kEndplateCount = 2 * kVertebraCount;  // 34

inline constexpr double kDegPerRad = 180.0 / std::numbers::pi;
inline constexpr double kRadPerDeg = std::numbers::pi / 180.0;

// All tilts are radians in (-pi/2, pi/2], measured left to right; positive means
// the right side sits lower on screen (y grows downward). A vertical endplate
// maps to +pi/2.
struct TiltProfile {
    std::array<double, kEndplateCount> endplate_rad{};   // v0-upper, v0-lower, v1-upper, ...
    std::array<double, kVertebraCount> vertebral_rad{};  // mean of the two endplates
};

// Tilt of the segment left->right. Throws GeometryError when the points coincide.
double endplate_tilt(const Point& left, const Point& right);

// Upper endplate from TL,TR and lower from BL,BR for each vertebra.
std::array<double, kEndplateCount> endplate_tilts(const SpineLandmarks& sl);

std::array<double, kVertebraCount> vertebral_tilts(
    const std::array<double, kEndplateCount>& endplate_rad);

TiltProfile tilt_profile(const SpineLandmarks& sl);

}  // namespace cobbkit
