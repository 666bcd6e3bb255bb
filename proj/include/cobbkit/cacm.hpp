#pragma once

#include <array>
#include <set>
#include <string>
#include <vector>

#include "cobbkit/landmarks.hpp"
#include "cobbkit/tilt.hpp"

namespace cobbkit {

inline constexpr double kDefaultEpsilonRad = 1e-6;

enum class CobbMethod { Cacm, Cam };

enum class WindowKind { Interior, End };

// Inclusive 0-based vertebra range, first < last.
struct SegmentWindow {
    WindowKind kind = WindowKind::Interior;
    int first = 0;
    int last = 0;
    bool operator==(const SegmentWindow&) const = default;
};

struct WindowAngle {
    SegmentWindow window;
    double angle_deg = 0.0;
    bool operator==(const WindowAngle&) const = default;
};

enum class CobbFlag { SingleCurve, ClampedNegativeEndAngle, ManyInflections };

std::string to_string(CobbFlag flag);
std::string to_string(CobbMethod method);

// Sorted, deduplicated, every index in 1..15 (an inflection needs neighbours on
// both sides; sign changes at the extremes are attributed to the nearest
// interior vertebra).
struct InflectionSet {
    std::vector<int> indices;
    int count() const { return static_cast<int>(indices.size()); }
    bool operator==(const InflectionSet&) const = default;
};

struct SegmentWindows {
    std::vector<SegmentWindow> interior;  // one per inflection, in inflection order
    std::vector<SegmentWindow> ends;      // [0, I_first] and [I_last, 16]
};

struct EndAngle {
    double angle_deg = 0.0;
    bool clamped_negative = false;  // the literal max - |min| would have been negative
};

struct SelectedAngles {
    std::array<double, 3> angles_deg{};
    std::set<CobbFlag> flags;
};

struct CobbReport {
    std::string image_id;
    CobbMethod method = CobbMethod::Cacm;
    std::array<double, 3> angles_deg{};
    std::vector<int> inflections;  // 0-based internally; serialized 1-based
    std::vector<WindowAngle> windows;
    std::set<CobbFlag> flags;
};

// A vertebra k is an inflection when its tilt sits inside the epsilon band with
// neighbours of opposite sign, or when the sign flips between k and k+1 (the
// member with the smaller |tilt| is taken, ties to the smaller index).
InflectionSet find_inflections(const std::array<double, kVertebraCount>& tilts_rad,
                               double epsilon_rad = kDefaultEpsilonRad);

// Interior window i spans the neighbouring inflections (spine ends when absent);
// the two end windows run from each spine end to its nearest inflection.
// Throws StructureError when the set is empty (callers fall back to the
// single-curve path).
SegmentWindows segment_windows(const InflectionSet& inflections);

// max(tilt) + |min(tilt)| over the window, degrees.
double interior_angle_deg(const SegmentWindow& window,
                          const std::array<double, kVertebraCount>& tilts_rad);

// Tilt range over the window, degrees; flags when the literal max - |min|
// would have gone negative.
EndAngle end_angle_deg(const SegmentWindow& window,
                       const std::array<double, kVertebraCount>& tilts_rad);

// Branch table on the inflection count M = interior_deg.size():
//   M=0 -> [full_range_deg, 0, 0] + single_curve
//   M=1 -> [interior, end0, end1]
//   M=2 -> [interior0, interior1, max(end)]
//   M=3 -> interiors as-is
//   M>3 -> three largest interiors, descending + many_inflections
SelectedAngles select_cobb(const std::vector<double>& interior_deg,
                           const std::vector<double>& end_deg,
                           double full_range_deg);

CobbReport cacm_from_tilts(const std::string& image_id,
                           const std::array<double, kVertebraCount>& tilts_rad,
                           double epsilon_rad = kDefaultEpsilonRad);

CobbReport cacm_pipeline(const SpineLandmarks& sl, double epsilon_rad = kDefaultEpsilonRad);

// Pairwise-tilt baseline: MT maximizes T[p] - T[q] over p < q (ties to the
// smallest p, then q); PT and TL repeat the scan inside [0, p*] and [q*, 16],
// zero when a window has fewer than two vertebrae. Negative scans clamp to 0.
CobbReport cam_from_tilts(const std::string& image_id,
                          const std::array<double, kVertebraCount>& tilts_rad);

CobbReport cam_baseline(const SpineLandmarks& sl);

// One-line JSON with stable key order {image_id, method, angles_deg, inflections,
// windows, flags}. Vertebra indices are serialized 1-based for reporting.
std::string report_json(const CobbReport& report);

}  // namespace cobbkit
