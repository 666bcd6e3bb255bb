#include "cobbkit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "cobbkit/error.hpp"

namespace cobbkit {

namespace {

std::map<std::string, const SpineLandmarks*> index_by_id(const std::vector<SpineLandmarks>& v,
                                                         const char* side) {
    std::map<std::string, const SpineLandmarks*> m;
    for (const auto& sl : v)
        if (!m.emplace(sl.image_id, &sl).second)
            throw StructureError(std::string("duplicate image_id '") + sl.image_id + "' in " +
                                 side);
    return m;
}

void check_pairs(const std::vector<LandmarkPair>& pairs) {
    if (pairs.empty()) throw StructureError("no landmark pairs");
}

}  // namespace

std::vector<LandmarkPair> pair_by_image_id(const std::vector<SpineLandmarks>& preds,
                                           const std::vector<SpineLandmarks>& gts) {
    const auto pm = index_by_id(preds, "predictions");
    const auto gm = index_by_id(gts, "ground truth");
    std::vector<std::string> only_pred, only_gt;
    for (const auto& [id, sl] : pm)
        if (!gm.count(id)) only_pred.push_back(id);
    for (const auto& [id, sl] : gm)
        if (!pm.count(id)) only_gt.push_back(id);
    if (!only_pred.empty() || !only_gt.empty()) {
        std::string msg = "image sets differ;";
        if (!only_pred.empty()) {
            msg += " prediction-only:";
            for (const auto& id : only_pred) msg += " " + id;
        }
        if (!only_gt.empty()) {
            msg += " ground-truth-only:";
            for (const auto& id : only_gt) msg += " " + id;
        }
        throw StructureError(msg);
    }
    std::vector<LandmarkPair> pairs;
    pairs.reserve(pm.size());
    for (const auto& [id, p] : pm) {
        const SpineLandmarks* g = gm.at(id);
        if (p->pixel_spacing_mm != g->pixel_spacing_mm)
            throw StructureError("pixel spacing differs for image '" + id + "'");
        pairs.push_back({*p, *g});
    }
    return pairs;
}

double landmark_mse_mm2(const std::vector<LandmarkPair>& pairs) {
    check_pairs(pairs);
    double acc = 0.0;
    std::size_t n = 0;
    for (const auto& pr : pairs) {
        const double s = pr.gt.pixel_spacing_mm;
        const auto p = flatten(pr.pred);
        const auto g = flatten(pr.gt);
        for (int i = 0; i < kLandmarkCount; ++i) {
            const double dx = (p[i].x - g[i].x) * s;
            const double dy = (p[i].y - g[i].y) * s;
            acc += dx * dx + dy * dy;
            ++n;
        }
    }
    return acc / static_cast<double>(n);
}

double sdr_percent(const std::vector<LandmarkPair>& pairs, double delta_mm) {
    check_pairs(pairs);
    if (!(delta_mm >= 0.0)) throw ValueError("sdr radius must be >= 0");
    std::size_t hit = 0, n = 0;
    for (const auto& pr : pairs) {
        const double s = pr.gt.pixel_spacing_mm;
        const auto p = flatten(pr.pred);
        const auto g = flatten(pr.gt);
        for (int i = 0; i < kLandmarkCount; ++i) {
            const double dx = (p[i].x - g[i].x) * s;
            const double dy = (p[i].y - g[i].y) * s;
            if (std::sqrt(dx * dx + dy * dy) <= delta_mm) ++hit;
            ++n;
        }
    }
    return 100.0 * static_cast<double>(hit) / static_cast<double>(n);
}

SmapeResult smape_percent(const std::vector<AnglePair>& pairs) {
    if (pairs.empty()) throw StructureError("no angle pairs");
    SmapeResult res;
    double acc = 0.0;
    for (const auto& pr : pairs) {
        double num = 0.0, den = 0.0;
        for (int i = 0; i < 3; ++i) {
            if (pr.pred[i] < 0.0 || pr.gt[i] < 0.0)
                throw ValueError("smape expects nonnegative angles");
            num += std::abs(pr.pred[i] - pr.gt[i]);
            den += pr.pred[i] + pr.gt[i];
        }
        if (den == 0.0) {
            ++res.skipped;
            continue;
        }
        acc += num / den;
        ++res.n_images;
    }
    if (res.n_images > 0) res.percent = 100.0 * acc / res.n_images;
    return res;
}

AngleErrorStats angle_errors(const std::vector<AnglePair>& pairs) {
    if (pairs.empty()) throw StructureError("no angle pairs");
    AngleErrorStats st;
    for (const auto& pr : pairs) {
        double l2 = 0.0, l1 = 0.0, linf = 0.0;
        for (int i = 0; i < 3; ++i) {
            st.cmae_deg += circular_distance_deg(pr.pred[i], pr.gt[i]);
            const double d = std::abs(pr.pred[i] - pr.gt[i]);
            l2 += d * d;
            l1 += d;
            linf = std::max(linf, d);
        }
        st.ed_deg += std::sqrt(l2);
        st.md_deg += l1;
        st.cd_deg += linf;
    }
    const double n = static_cast<double>(pairs.size());
    st.cmae_deg /= 3.0 * n;
    st.ed_deg /= n;
    st.md_deg /= n;
    st.cd_deg /= n;
    return st;
}

double circular_distance_deg(double a, double g) {
    double d = std::fmod(std::abs(a - g), 360.0);
    return std::min(d, 360.0 - d);
}

}  // namespace cobbkit
