#include "cobbkit/selfcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <string>
#include <vector>

#include "cobbkit/cacm.hpp"
#include "cobbkit/frem.hpp"
#include "cobbkit/rng.hpp"
#include "cobbkit/synth.hpp"
#include "cobbkit/tilt.hpp"

namespace cobbkit {

namespace {

bool bits_equal(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() &&
           std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

FeatureTensor random_tensor(int c, int h, int w, SeededRng& rng) {
    FeatureTensor t;
    t.channels = c;
    t.height = h;
    t.width = w;
    t.values.resize(static_cast<std::size_t>(c) * h * w);
    for (double& v : t.values) v = rng.uniform(-1.0, 1.0);
    return t;
}

Mat permute_square(const Mat& m, const std::vector<int>& perm) {
    Mat out(m.rows, m.cols);
    for (int r = 0; r < m.rows; ++r)
        for (int c = 0; c < m.cols; ++c) out.at(r, c) = m.at(perm[r], perm[c]);
    return out;
}

FeatureTensor permute_channels(const FeatureTensor& t, const std::vector<int>& perm) {
    FeatureTensor out = t;
    for (int ch = 0; ch < t.channels; ++ch)
        for (int p = 0; p < t.positions(); ++p) out.at(ch, p) = t.at(perm[ch], p);
    return out;
}

std::string where(int instance, int c, int hw) {
    return "instance " + std::to_string(instance) + " (C=" + std::to_string(c) +
           ", H=W=" + std::to_string(hw) + ")";
}

std::string compare_reports(const CobbReport& a, const CobbReport& b, double angle_tol) {
    for (int i = 0; i < 3; ++i) {
        const auto ai = static_cast<std::size_t>(i);
        if (std::abs(a.angles_deg[ai] - b.angles_deg[ai]) > angle_tol)
            return "angle " + std::to_string(i + 1) + " differs: " +
                   std::to_string(a.angles_deg[ai]) + " vs " + std::to_string(b.angles_deg[ai]);
    }
    if (a.inflections != b.inflections) return "inflection sets differ";
    if (a.flags != b.flags) return "flags differ";
    if (a.windows.size() != b.windows.size()) return "window counts differ";
    for (std::size_t i = 0; i < a.windows.size(); ++i) {
        if (!(a.windows[i].window == b.windows[i].window)) return "window ranges differ";
        if (std::abs(a.windows[i].angle_deg - b.windows[i].angle_deg) > angle_tol)
            return "window angle differs";
    }
    return {};
}

}  // namespace

std::vector<CheckResult> run_frem_checks(std::uint64_t seed, int instances) {
    CheckResult rows{"frem.stochastic_rows", true, ""};
    CheckResult collapse{"frem.residual_collapse", true, ""};
    CheckResult perm_eq{"frem.permutation_equivariance", true, ""};
    CheckResult gains{"frem.gain_selectors", true, ""};
    CheckResult repeat{"frem.repeat_determinism", true, ""};

    constexpr int kChannels[] = {2, 4, 68};
    constexpr int kSides[] = {4, 8};
    SeededRng rng(seed);

    for (int it = 0; it < instances; ++it) {
        const int c = kChannels[it % 3];
        const int hw = kSides[(it / 3) % 2];
        FremParams params = default_frem_params(c, hw, hw, rng.next_u64());
        params.lambda = rng.uniform(-0.5, 0.5);
        params.gamma = rng.uniform(-0.5, 0.5);
        params.map_gains = {rng.uniform(0.1, 1.0), rng.uniform(0.1, 1.0),
                            rng.uniform(0.1, 1.0)};
        const FeatureTensor fin = random_tensor(c, hw, hw, rng);
        const FeatureTensor fout = random_tensor(c, hw, hw, rng);

        {
            const Mat au1 = attention_map(fin, fin);
            const Mat au2 = attention_map(fout, fout);
            const Mat cr = attention_map(fin, fout);
            const FeatureTensor fg = geometric_features(fout, au1, params.lambda);
            const Mat v = channel_attention(fg, params.g1_proj, params.g2_proj);
            if (rows.passed &&
                !(rows_are_distributions(au1) && rows_are_distributions(au2) &&
                  rows_are_distributions(cr) && rows_are_distributions(v))) {
                rows.passed = false;
                rows.detail = where(it, c, hw) + ": attention rows do not sum to 1";
            }
            if (gains.passed) {
                const Mat f1 = fuse_attention(au1, au2, cr, {1.0, 0.0, 0.0});
                const Mat f2 = fuse_attention(au1, au2, cr, {0.0, 1.0, 0.0});
                const Mat f3 = fuse_attention(au1, au2, cr, {0.0, 0.0, 1.0});
                if (!bits_equal(f1.v, au1.v) || !bits_equal(f2.v, au2.v) ||
                    !bits_equal(f3.v, cr.v)) {
                    gains.passed = false;
                    gains.detail = where(it, c, hw) + ": unit gain does not select its map";
                }
            }
            if (collapse.passed) {
                const FeatureTensor g0 = geometric_features(fout, au1, 0.0);
                const Mat v0 = channel_attention(fout, params.g1_proj, params.g2_proj);
                const FeatureTensor s0 = semantic_features(fout, v0, 0.0);
                bool ok = g0.values.size() == fout.values.size() &&
                          s0.values.size() == fout.values.size();
                for (std::size_t i = 0; ok && i < fout.values.size(); ++i)
                    ok = g0.values[i] == fout.values[i] && s0.values[i] == fout.values[i];
                if (!ok) {
                    collapse.passed = false;
                    collapse.detail = where(it, c, hw) + ": zero gain left a residual";
                }
            }
        }

        const FremOutput base = frem_forward(fin, fout, params);
        if (repeat.passed) {
            const FremOutput again = frem_forward(fin, fout, params);
            if (!bits_equal(base.landmarks, again.landmarks) ||
                !bits_equal(base.heatmaps.values, again.heatmaps.values)) {
                repeat.passed = false;
                repeat.detail = where(it, c, hw) + ": repeated run changed bits";
            }
        }
        if (perm_eq.passed) {
            std::vector<int> perm(static_cast<std::size_t>(c));
            std::iota(perm.begin(), perm.end(), 0);
            for (int i = c - 1; i > 0; --i)
                std::swap(perm[static_cast<std::size_t>(i)],
                          perm[static_cast<std::size_t>(rng.below(i + 1))]);
            FremParams pp = params;
            pp.input_proj = permute_square(params.input_proj, perm);
            pp.output_proj = permute_square(params.output_proj, perm);
            pp.g1_proj = permute_square(params.g1_proj, perm);
            pp.g2_proj = permute_square(params.g2_proj, perm);
            const FremOutput permuted =
                frem_forward(permute_channels(fin, perm), permute_channels(fout, perm), pp);
            bool ok = true;
            for (int ch = 0; ok && ch < c; ++ch) {
                const auto dst = static_cast<std::size_t>(ch);
                const auto src = static_cast<std::size_t>(perm[dst]);
                ok = std::memcmp(&permuted.landmarks[2 * dst], &base.landmarks[2 * src],
                                 2 * sizeof(double)) == 0 &&
                     std::memcmp(&permuted.heatmaps.values[dst * base.heatmaps.pixels()],
                                 &base.heatmaps.values[src * base.heatmaps.pixels()],
                                 static_cast<std::size_t>(base.heatmaps.pixels()) *
                                     sizeof(double)) == 0;
            }
            if (!ok) {
                perm_eq.passed = false;
                perm_eq.detail = where(it, c, hw) + ": permuted run is not a bit-exact"
                                 " channel shuffle of the base run";
            }
        }
    }
    return {rows, collapse, perm_eq, gains, repeat};
}

LossCheckSummary run_loss_checks(std::uint64_t seed, const LossConfig& cfg) {
    SeededRng rng(seed);
    LossCheckSummary sum;
    sum.seed = seed;

    const int c = 4, side = 8;
    std::vector<std::pair<double, double>> centers;
    for (int i = 0; i < c; ++i)
        centers.emplace_back(rng.uniform(1.0, side - 2.0), rng.uniform(1.0, side - 2.0));
    const HeatmapSet gt = gaussian_heatmaps(c, side, side, centers);

    std::vector<double> x0(gt.values.size());
    for (double& v : x0) v = rng.uniform(0.001, 1.0);
    const ValueGradFn heatmap_fn = [&gt, &cfg, c, side](const std::vector<double>& x) {
        HeatmapSet pred{c, side, side, x};
        LossResult r = heatmap_loss(pred, gt, cfg);
        return std::make_pair(r.value, std::move(r.gradient));
    };
    // central differences lose relative accuracy where the slope is tiny
    // (background pixels far from every peak), so those coordinates are skipped
    const std::vector<double> g0 = heatmap_fn(x0).second;
    std::vector<char> hm_exclude(x0.size(), 0);
    for (std::size_t i = 0; i < x0.size(); ++i)
        if (std::abs(g0[i]) < 1e-3) hm_exclude[i] = 1;
    const FiniteDiffReport hm = finite_diff_check(heatmap_fn, x0, 1e-6, &hm_exclude);

    const int n_coords = 136;
    std::vector<double> pred(n_coords), target(n_coords);
    for (double& v : pred) v = rng.uniform(0.0, 100.0);
    for (double& v : target) v = rng.uniform(0.0, 100.0);
    const double h = 1e-5;
    std::vector<char> exclude(pred.size(), 0);
    for (std::size_t i = 0; i < pred.size(); ++i)
        if (std::abs(pred[i] - target[i]) < 10.0 * h) exclude[i] = 1;  // kink neighbourhood
    const ValueGradFn lm_fn = [&target](const std::vector<double>& x) {
        LossResult r = landmark_loss(x, target);
        return std::make_pair(r.value, std::move(r.gradient));
    };
    const FiniteDiffReport lm = finite_diff_check(lm_fn, pred, h, &exclude);

    sum.max_rel_err = std::max(hm.max_rel_err, lm.max_rel_err);
    sum.n_coords = hm.n_coords + lm.n_coords;
    sum.mean_rel_err = (hm.mean_rel_err * hm.n_coords + lm.mean_rel_err * lm.n_coords) /
                       std::max(1, sum.n_coords);
    sum.passed = sum.max_rel_err <= 1e-5;
    return sum;
}

CheckResult run_oracle_equivalence(std::uint64_t seed, int profiles, double epsilon_rad) {
    CheckResult res{"cacm.oracle_equivalence", true, ""};
    SeededRng rng(seed);
    for (int i = 0; i < profiles; ++i) {
        std::array<double, kVertebraCount> tilts{};
        for (double& t : tilts) t = rng.uniform(-25.0, 25.0) * kRadPerDeg;
        const std::string id = "profile-" + std::to_string(i);
        const CobbReport got = cacm_from_tilts(id, tilts, epsilon_rad);
        const CobbReport want = oracle_cobb(id, tilts, epsilon_rad);
        const std::string diff = compare_reports(got, want, 1e-9);
        if (!diff.empty()) {
            res.passed = false;
            res.detail = id + ": " + diff;
            return res;
        }
    }
    res.detail = std::to_string(profiles) + " profiles agree";
    return res;
}

CheckResult run_synth_round_trip(std::uint64_t seed, int spines) {
    CheckResult res{"synth.round_trip", true, ""};
    SeededRng rng(seed);
    for (int i = 0; i < spines; ++i) {
        SpineSpec spec;
        for (double& t : spec.tilt_profile_deg) t = rng.uniform(-25.0, 25.0);
        spec.seed = rng.next_u64();
        const std::string id = "spine-" + std::to_string(i);
        GeneratedSpine gen;
        try {
            gen = generate_spine(spec, id);
        } catch (const std::exception& e) {
            res.passed = false;
            res.detail = id + ": generation failed: " + e.what();
            return res;
        }
        const TiltProfile recovered = tilt_profile(gen.landmarks);
        for (int v = 0; v < kVertebraCount; ++v) {
            const auto vi = static_cast<std::size_t>(v);
            if (std::abs(recovered.vertebral_rad[vi] - gen.ground_truth.vertebral_rad[vi]) >
                1e-9) {
                res.passed = false;
                res.detail = id + ": vertebra " + std::to_string(v + 1) +
                             " tilt did not survive the round trip";
                return res;
            }
        }
        const CobbReport got = cacm_pipeline(gen.landmarks);
        const CobbReport want = oracle_cobb(id, gen.ground_truth.vertebral_rad);
        const std::string diff = compare_reports(got, want, 1e-6);
        if (!diff.empty()) {
            res.passed = false;
            res.detail = id + ": " + diff;
            return res;
        }
    }
    res.detail = std::to_string(spines) + " spines round-trip";
    return res;
}

std::vector<CheckResult> run_selfcheck(std::uint64_t seed) {
    std::vector<CheckResult> out = run_frem_checks(seed);
    const LossCheckSummary loss = run_loss_checks(seed);
    CheckResult lc{"loss.gradient_check", loss.passed, ""};
    lc.detail = "max_rel_err=" + std::to_string(loss.max_rel_err) +
                " mean_rel_err=" + std::to_string(loss.mean_rel_err) +
                " n_coords=" + std::to_string(loss.n_coords);
    out.push_back(lc);
    out.push_back(run_oracle_equivalence(seed));
    out.push_back(run_synth_round_trip(seed));
    return out;
}

}  // namespace cobbkit
