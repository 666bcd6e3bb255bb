#include "cobbkit/cacm.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <json.hpp>

#include "cobbkit/error.hpp"

namespace cobbkit {

namespace {

void check_tilts(const std::array<double, kVertebraCount>& t) {
    for (double x : t)
        if (!std::isfinite(x)) throw ValueError("non-finite vertebral tilt");
}

std::pair<double, double> window_min_max(const SegmentWindow& w,
                                         const std::array<double, kVertebraCount>& t) {
    if (w.first < 0 || w.last >= kVertebraCount || w.first >= w.last)
        throw ValueError("bad segment window [" + std::to_string(w.first) + ", " +
                         std::to_string(w.last) + "]");
    double mn = t[w.first], mx = t[w.first];
    for (int k = w.first + 1; k <= w.last; ++k) {
        mn = std::min(mn, t[k]);
        mx = std::max(mx, t[k]);
    }
    return {mn, mx};
}

double full_range_deg(const std::array<double, kVertebraCount>& t) {
    auto [mn, mx] = std::minmax_element(t.begin(), t.end());
    return (*mx - *mn) * kDegPerRad;
}

}  // namespace

std::string to_string(CobbFlag flag) {
    switch (flag) {
        case CobbFlag::SingleCurve: return "single_curve";
        case CobbFlag::ClampedNegativeEndAngle: return "clamped_negative_end_angle";
        default: return "many_inflections";
    }
}

std::string to_string(CobbMethod method) {
    return method == CobbMethod::Cacm ? "cacm" : "cam";
}

InflectionSet find_inflections(const std::array<double, kVertebraCount>& tilts_rad,
                               double epsilon_rad) {
    check_tilts(tilts_rad);
    if (!(epsilon_rad >= 0.0)) throw ValueError("epsilon must be >= 0");
    const auto& t = tilts_rad;

    std::set<int> idx;
    // Near-zero vertebra whose neighbours disagree in sign.
    for (int k = 1; k <= kVertebraCount - 2; ++k)
        if (std::abs(t[k]) <= epsilon_rad && t[k - 1] * t[k + 1] < 0.0) idx.insert(k);
    // Sign flip between neighbours; the flatter of the two marks the inflection.
    for (int k = 0; k <= kVertebraCount - 2; ++k) {
        if (t[k] * t[k + 1] < 0.0) {
            int pick = std::abs(t[k]) <= std::abs(t[k + 1]) ? k : k + 1;
            pick = std::clamp(pick, 1, kVertebraCount - 2);
            idx.insert(pick);
        }
    }
    return InflectionSet{std::vector<int>(idx.begin(), idx.end())};
}

SegmentWindows segment_windows(const InflectionSet& inflections) {
    const auto& I = inflections.indices;
    const int m = inflections.count();
    if (m == 0) throw StructureError("segment_windows needs at least one inflection");
    for (int i = 0; i < m; ++i) {
        if (I[i] < 1 || I[i] > kVertebraCount - 2)
            throw ValueError("inflection index " + std::to_string(I[i]) + " out of range");
        if (i > 0 && I[i] <= I[i - 1]) throw ValueError("inflection indices must be ascending");
    }

    SegmentWindows out;
    for (int i = 0; i < m; ++i) {
        SegmentWindow w;
        w.kind = WindowKind::Interior;
        w.first = i == 0 ? 0 : I[i - 1];
        w.last = i == m - 1 ? kVertebraCount - 1 : I[i + 1];
        out.interior.push_back(w);
    }
    out.ends.push_back(SegmentWindow{WindowKind::End, 0, I.front()});
    out.ends.push_back(SegmentWindow{WindowKind::End, I.back(), kVertebraCount - 1});
    return out;
}

double interior_angle_deg(const SegmentWindow& window,
                          const std::array<double, kVertebraCount>& tilts_rad) {
    auto [mn, mx] = window_min_max(window, tilts_rad);
#ifdef COBBKIT_SELFCHECK_FAULT
    // Deliberate defect used by the tests to prove the reference comparison
    // actually trips; never defined in shipped builds.
    return (mx - std::abs(mn)) * kDegPerRad;
#else
    return (mx + std::abs(mn)) * kDegPerRad;
#endif
}

EndAngle end_angle_deg(const SegmentWindow& window,
                       const std::array<double, kVertebraCount>& tilts_rad) {
    auto [mn, mx] = window_min_max(window, tilts_rad);
    EndAngle out;
    out.angle_deg = (mx - mn) * kDegPerRad;
    out.clamped_negative = (mx - std::abs(mn)) < 0.0;
    return out;
}

SelectedAngles select_cobb(const std::vector<double>& interior_deg,
                           const std::vector<double>& end_deg,
                           double full_range_deg) {
    SelectedAngles out;
    const std::size_t m = interior_deg.size();
    if (m == 0) {
        out.angles_deg = {full_range_deg, 0.0, 0.0};
        out.flags.insert(CobbFlag::SingleCurve);
        return out;
    }
    if (end_deg.size() != 2) throw ValueError("expected exactly two end angles");
    if (m == 1) {
        out.angles_deg = {interior_deg[0], end_deg[0], end_deg[1]};
    } else if (m == 2) {
        out.angles_deg = {interior_deg[0], interior_deg[1], std::max(end_deg[0], end_deg[1])};
    } else if (m == 3) {
        out.angles_deg = {interior_deg[0], interior_deg[1], interior_deg[2]};
    } else {
        std::vector<double> sorted(interior_deg);
        std::sort(sorted.begin(), sorted.end(), std::greater<>());
        out.angles_deg = {sorted[0], sorted[1], sorted[2]};
        out.flags.insert(CobbFlag::ManyInflections);
    }
    return out;
}

CobbReport cacm_from_tilts(const std::string& image_id,
                           const std::array<double, kVertebraCount>& tilts_rad,
                           double epsilon_rad) {
    CobbReport r;
    r.image_id = image_id;
    r.method = CobbMethod::Cacm;

    const InflectionSet infl = find_inflections(tilts_rad, epsilon_rad);
    r.inflections = infl.indices;

    if (infl.count() == 0) {
        const double range = full_range_deg(tilts_rad);
        SegmentWindow whole{WindowKind::Interior, 0, kVertebraCount - 1};
        r.windows.push_back(WindowAngle{whole, range});
        const SelectedAngles sel = select_cobb({}, {}, range);
        r.angles_deg = sel.angles_deg;
        r.flags = sel.flags;
        return r;
    }

    const SegmentWindows windows = segment_windows(infl);
    std::vector<double> interior;
    for (const SegmentWindow& w : windows.interior) {
        const double a = interior_angle_deg(w, tilts_rad);
        interior.push_back(a);
        r.windows.push_back(WindowAngle{w, a});
    }
    std::vector<double> ends;
    for (const SegmentWindow& w : windows.ends) {
        const EndAngle e = end_angle_deg(w, tilts_rad);
        ends.push_back(e.angle_deg);
        if (e.clamped_negative) r.flags.insert(CobbFlag::ClampedNegativeEndAngle);
        r.windows.push_back(WindowAngle{w, e.angle_deg});
    }

    const SelectedAngles sel = select_cobb(interior, ends, 0.0);
    r.angles_deg = sel.angles_deg;
    r.flags.insert(sel.flags.begin(), sel.flags.end());
    return r;
}

CobbReport cacm_pipeline(const SpineLandmarks& sl, double epsilon_rad) {
    return cacm_from_tilts(sl.image_id, tilt_profile(sl).vertebral_rad, epsilon_rad);
}

CobbReport cam_from_tilts(const std::string& image_id,
                          const std::array<double, kVertebraCount>& tilts_rad) {
    check_tilts(tilts_rad);
    const auto& t = tilts_rad;

    // Lexicographic scan keeps the first maximizer, i.e. smallest p then q.
    auto best_drop = [&t](int first, int last) {
        double best = 0.0;
        int bp = -1, bq = -1;
        for (int p = first; p < last; ++p)
            for (int q = p + 1; q <= last; ++q)
                if (bp < 0 || t[p] - t[q] > best) {
                    best = t[p] - t[q];
                    bp = p;
                    bq = q;
                }
        return std::tuple<double, int, int>(best, bp, bq);
    };

    auto [mt, p_star, q_star] = best_drop(0, kVertebraCount - 1);

    CobbReport r;
    r.image_id = image_id;
    r.method = CobbMethod::Cam;

    double pt = 0.0, tl = 0.0;
    int pt_last = p_star, tl_first = q_star;
    if (p_star >= 1) pt = std::get<0>(best_drop(0, p_star));
    if (q_star <= kVertebraCount - 2) tl = std::get<0>(best_drop(q_star, kVertebraCount - 1));

    // Cobb angles cannot be negative; a monotone rising profile scans negative.
    const double mt_deg = std::max(0.0, mt) * kDegPerRad;
    const double pt_deg = std::max(0.0, pt) * kDegPerRad;
    const double tl_deg = std::max(0.0, tl) * kDegPerRad;
    r.angles_deg = {mt_deg, pt_deg, tl_deg};

    r.windows.push_back(WindowAngle{SegmentWindow{WindowKind::Interior, p_star, q_star}, mt_deg});
    if (pt_last >= 1)
        r.windows.push_back(WindowAngle{SegmentWindow{WindowKind::End, 0, pt_last}, pt_deg});
    if (tl_first <= kVertebraCount - 2)
        r.windows.push_back(
            WindowAngle{SegmentWindow{WindowKind::End, tl_first, kVertebraCount - 1}, tl_deg});
    return r;
}

CobbReport cam_baseline(const SpineLandmarks& sl) {
    return cam_from_tilts(sl.image_id, tilt_profile(sl).vertebral_rad);
}

std::string report_json(const CobbReport& report) {
    nlohmann::ordered_json j;
    j["image_id"] = report.image_id;
    j["method"] = to_string(report.method);
    j["angles_deg"] = report.angles_deg;
    auto infl = nlohmann::ordered_json::array();
    for (int i : report.inflections) infl.push_back(i + 1);
    j["inflections"] = std::move(infl);
    auto windows = nlohmann::ordered_json::array();
    for (const WindowAngle& wa : report.windows) {
        nlohmann::ordered_json w;
        w["kind"] = wa.window.kind == WindowKind::Interior ? "interior" : "end";
        w["first"] = wa.window.first + 1;
        w["last"] = wa.window.last + 1;
        w["angle_deg"] = wa.angle_deg;
        windows.push_back(std::move(w));
    }
    j["windows"] = std::move(windows);
    auto flags = nlohmann::ordered_json::array();
    for (CobbFlag f :
         {CobbFlag::SingleCurve, CobbFlag::ClampedNegativeEndAngle, CobbFlag::ManyInflections})
        if (report.flags.count(f)) flags.push_back(to_string(f));
    j["flags"] = std::move(flags);
    return j.dump();
}

}  // namespace cobbkit
