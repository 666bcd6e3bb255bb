#include "cobbkit/tilt.hpp"

#include <cmath>
#include <numbers>

#include "cobbkit/error.hpp"

namespace cobbkit {

double endplate_tilt(const Point& left, const Point& right) {
    const double dx = right.x - left.x;
    const double dy = right.y - left.y;
    if (dx == 0.0 && dy == 0.0)
        throw GeometryError("degenerate endplate: coincident landmarks");
    if (!std::isfinite(dx) || !std::isfinite(dy))
        throw ValueError("non-finite endplate landmarks");
    double t = std::atan2(dy, dx);  // (-pi, pi]
    // Fold into (-pi/2, pi/2]; a vertical endplate lands on +pi/2.
    constexpr double half_pi = std::numbers::pi / 2.0;
    if (t > half_pi)
        t -= std::numbers::pi;
    else if (t <= -half_pi)
        t += std::numbers::pi;
    return t;
}

std::array<double, kEndplateCount> endplate_tilts(const SpineLandmarks& sl) {
    if (static_cast<int>(sl.vertebrae.size()) != kVertebraCount)
        throw StructureError("image '" + sl.image_id + "' has " +
                             std::to_string(sl.vertebrae.size()) + " vertebrae, expected " +
                             std::to_string(kVertebraCount));
    std::array<double, kEndplateCount> out{};
    for (int v = 0; v < kVertebraCount; ++v) {
        const Vertebra& vb = sl.vertebrae[v];
        out[2 * v] = endplate_tilt(vb.top_left, vb.top_right);
        out[2 * v + 1] = endplate_tilt(vb.bottom_left, vb.bottom_right);
    }
    return out;
}

std::array<double, kVertebraCount> vertebral_tilts(
    const std::array<double, kEndplateCount>& endplate_rad) {
    std::array<double, kVertebraCount> out{};
    for (int v = 0; v < kVertebraCount; ++v)
        out[v] = 0.5 * (endplate_rad[2 * v] + endplate_rad[2 * v + 1]);
    return out;
}

TiltProfile tilt_profile(const SpineLandmarks& sl) {
    TiltProfile p;
    p.endplate_rad = endplate_tilts(sl);
    p.vertebral_rad = vertebral_tilts(p.endplate_rad);
    return p;
}

}  // namespace cobbkit
