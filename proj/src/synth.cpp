#include "cobbkit/synth.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "cobbkit/error.hpp"
#include "cobbkit/rng.hpp"

namespace cobbkit {

namespace {

struct Vec2 {
    double x = 0.0, y = 0.0;
};

// Separating-axis test for two convex quads (corner order TL,TR,BR,BL).
bool quads_overlap(const std::array<Vec2, 4>& a, const std::array<Vec2, 4>& b) {
    const std::array<Vec2, 4>* polys[2] = {&a, &b};
    for (const auto* poly : polys) {
        for (int e = 0; e < 4; ++e) {
            const Vec2& p0 = (*poly)[e];
            const Vec2& p1 = (*poly)[(e + 1) % 4];
            const double nx = -(p1.y - p0.y);
            const double ny = p1.x - p0.x;
            double amin = 1e300, amax = -1e300, bmin = 1e300, bmax = -1e300;
            for (const Vec2& q : a) {
                const double d = q.x * nx + q.y * ny;
                amin = std::min(amin, d);
                amax = std::max(amax, d);
            }
            for (const Vec2& q : b) {
                const double d = q.x * nx + q.y * ny;
                bmin = std::min(bmin, d);
                bmax = std::max(bmax, d);
            }
            if (amax <= bmin || bmax <= amin) return false;  // separating axis found
        }
    }
    return true;
}

}  // namespace

GeneratedSpine generate_spine(const SpineSpec& spec, const std::string& image_id) {
    if (!(spec.vertebra_width_px > 0.0) || !(spec.vertebra_height_px > 0.0))
        throw ValueError("vertebra width and height must be positive");
    if (!(spec.gap_px > 0.0)) throw ValueError("gap must be positive");
    if (!(spec.jitter_px >= 0.0)) throw ValueError("jitter must be >= 0");

    std::array<double, kVertebraCount> theta{};
    for (int v = 0; v < kVertebraCount; ++v) {
        const double deg = spec.tilt_profile_deg[v];
        if (!std::isfinite(deg)) throw ValueError("non-finite tilt in profile");
        if (std::abs(deg) >= 90.0)
            throw ValueError("tilt " + std::to_string(deg) + " deg is outside (-90, 90)");
        theta[v] = deg * kRadPerDeg;
    }

    const double w2 = spec.vertebra_width_px / 2.0;
    const double h2 = spec.vertebra_height_px / 2.0;
    const double step = spec.vertebra_height_px + spec.gap_px;

    std::array<Vec2, kVertebraCount> u{}, d{}, c{};
    for (int v = 0; v < kVertebraCount; ++v) {
        u[v] = {std::cos(theta[v]), std::sin(theta[v])};
        d[v] = {-std::sin(theta[v]), std::cos(theta[v])};
    }
    c[0] = {0.0, 0.0};
    for (int v = 0; v + 1 < kVertebraCount; ++v)
        c[v + 1] = {c[v].x + 0.5 * step * (d[v].x + d[v + 1].x),
                    c[v].y + 0.5 * step * (d[v].y + d[v + 1].y)};

    SpineLandmarks sl;
    sl.image_id = image_id;
    sl.vertebrae.assign(kVertebraCount, Vertebra{});
    SeededRng rng(spec.seed);
    for (int v = 0; v < kVertebraCount; ++v) {
        Vertebra& vb = sl.vertebrae[v];
        vb.index = v;
        vb.top_left = {c[v].x - w2 * u[v].x - h2 * d[v].x, c[v].y - w2 * u[v].y - h2 * d[v].y};
        vb.top_right = {c[v].x + w2 * u[v].x - h2 * d[v].x, c[v].y + w2 * u[v].y - h2 * d[v].y};
        vb.bottom_left = {c[v].x - w2 * u[v].x + h2 * d[v].x, c[v].y - w2 * u[v].y + h2 * d[v].y};
        vb.bottom_right = {c[v].x + w2 * u[v].x + h2 * d[v].x, c[v].y + w2 * u[v].y + h2 * d[v].y};
        if (spec.jitter_px > 0.0) {
            for (Point* p : {&vb.top_left, &vb.top_right, &vb.bottom_left, &vb.bottom_right}) {
                p->x += rng.uniform(-spec.jitter_px, spec.jitter_px);
                p->y += rng.uniform(-spec.jitter_px, spec.jitter_px);
            }
        }
    }

    // Shift everything into positive coordinates with a small margin.
    double min_x = 1e300, min_y = 1e300;
    for (const Vertebra& vb : sl.vertebrae)
        for (const Point* p : {&vb.top_left, &vb.top_right, &vb.bottom_left, &vb.bottom_right}) {
            min_x = std::min(min_x, p->x);
            min_y = std::min(min_y, p->y);
        }
    const double shift_x = 10.0 - min_x, shift_y = 10.0 - min_y;
    for (Vertebra& vb : sl.vertebrae)
        for (Point* p : {&vb.top_left, &vb.top_right, &vb.bottom_left, &vb.bottom_right}) {
            p->x += shift_x;
            p->y += shift_y;
        }

    for (int v = 0; v + 1 < kVertebraCount; ++v) {
        auto quad = [&sl](int i) {
            const Vertebra& vb = sl.vertebrae[i];
            return std::array<Vec2, 4>{Vec2{vb.top_left.x, vb.top_left.y},
                                       Vec2{vb.top_right.x, vb.top_right.y},
                                       Vec2{vb.bottom_right.x, vb.bottom_right.y},
                                       Vec2{vb.bottom_left.x, vb.bottom_left.y}};
        };
        if (quads_overlap(quad(v), quad(v + 1)))
            throw GeometryError("vertebrae " + std::to_string(v) + " and " + std::to_string(v + 1) +
                                " overlap; increase the gap or soften the profile");
    }

    GeneratedSpine out;
    out.landmarks = std::move(sl);
    for (int v = 0; v < kVertebraCount; ++v) {
        out.ground_truth.endplate_rad[2 * v] = theta[v];
        out.ground_truth.endplate_rad[2 * v + 1] = theta[v];
        out.ground_truth.vertebral_rad[v] = theta[v];
    }
    return out;
}

// Everything below re-derives the Cobb contract with plain scans. It must not
// call into cacm.cpp; agreement between the two paths is itself a test target.
namespace oracle {
namespace {

std::vector<int> scan_inflections(const std::array<double, kVertebraCount>& t, double eps) {
    std::vector<int> hits;
    for (int k = 0; k < kVertebraCount; ++k) {
        const bool interior = k >= 1 && k <= kVertebraCount - 2;
        if (interior && std::fabs(t[k]) <= eps && t[k - 1] * t[k + 1] < 0.0) hits.push_back(k);
    }
    for (int k = 0; k + 1 < kVertebraCount; ++k) {
        if (t[k] * t[k + 1] < 0.0) {
            int pick;
            if (std::fabs(t[k]) < std::fabs(t[k + 1]))
                pick = k;
            else if (std::fabs(t[k + 1]) < std::fabs(t[k]))
                pick = k + 1;
            else
                pick = k;  // tie: smaller index
            if (pick == 0) pick = 1;
            if (pick == kVertebraCount - 1) pick = kVertebraCount - 2;
            hits.push_back(pick);
        }
    }
    std::sort(hits.begin(), hits.end());
    hits.erase(std::unique(hits.begin(), hits.end()), hits.end());
    return hits;
}

double window_max(const std::array<double, kVertebraCount>& t, int first, int last) {
    double m = t[first];
    for (int k = first; k <= last; ++k)
        if (t[k] > m) m = t[k];
    return m;
}

double window_min(const std::array<double, kVertebraCount>& t, int first, int last) {
    double m = t[first];
    for (int k = first; k <= last; ++k)
        if (t[k] < m) m = t[k];
    return m;
}

}  // namespace
}  // namespace oracle

CobbReport oracle_cobb(const std::string& image_id,
                       const std::array<double, kVertebraCount>& tilts_rad,
                       double epsilon_rad) {
    for (double x : tilts_rad)
        if (!std::isfinite(x)) throw ValueError("non-finite vertebral tilt");
    if (!(epsilon_rad >= 0.0)) throw ValueError("epsilon must be >= 0");
    const auto& t = tilts_rad;
    const int last_v = kVertebraCount - 1;

    CobbReport r;
    r.image_id = image_id;
    r.method = CobbMethod::Cacm;
    r.inflections = oracle::scan_inflections(t, epsilon_rad);
    const int m = static_cast<int>(r.inflections.size());

    if (m == 0) {
        const double range =
            (oracle::window_max(t, 0, last_v) - oracle::window_min(t, 0, last_v)) * kDegPerRad;
        r.windows.push_back(WindowAngle{SegmentWindow{WindowKind::Interior, 0, last_v}, range});
        r.angles_deg = {range, 0.0, 0.0};
        r.flags.insert(CobbFlag::SingleCurve);
        return r;
    }

    std::vector<double> interior;
    for (int i = 0; i < m; ++i) {
        const int first = i == 0 ? 0 : r.inflections[i - 1];
        const int last = i == m - 1 ? last_v : r.inflections[i + 1];
        const double mx = oracle::window_max(t, first, last);
        const double mn = oracle::window_min(t, first, last);
        const double angle = (mx + std::abs(mn)) * kDegPerRad;
        interior.push_back(angle);
        r.windows.push_back(WindowAngle{SegmentWindow{WindowKind::Interior, first, last}, angle});
    }

    double ends[2];
    const int end_first[2] = {0, r.inflections[m - 1]};
    const int end_last[2] = {r.inflections[0], last_v};
    for (int e = 0; e < 2; ++e) {
        const double mx = oracle::window_max(t, end_first[e], end_last[e]);
        const double mn = oracle::window_min(t, end_first[e], end_last[e]);
        ends[e] = (mx - mn) * kDegPerRad;
        if (mx - std::abs(mn) < 0.0) r.flags.insert(CobbFlag::ClampedNegativeEndAngle);
        r.windows.push_back(
            WindowAngle{SegmentWindow{WindowKind::End, end_first[e], end_last[e]}, ends[e]});
    }

    if (m == 1) {
        r.angles_deg = {interior[0], ends[0], ends[1]};
    } else if (m == 2) {
        r.angles_deg = {interior[0], interior[1], ends[0] > ends[1] ? ends[0] : ends[1]};
    } else if (m == 3) {
        r.angles_deg = {interior[0], interior[1], interior[2]};
    } else {
        std::vector<double> top(interior);
        std::sort(top.begin(), top.end());
        r.angles_deg = {top[top.size() - 1], top[top.size() - 2], top[top.size() - 3]};
        r.flags.insert(CobbFlag::ManyInflections);
    }
    return r;
}

}  // namespace cobbkit
