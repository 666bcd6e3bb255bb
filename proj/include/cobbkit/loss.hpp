#pragma once

#include <functional>
#include <utility>
#include <vector>

namespace cobbkit {

// Stack of per-channel spatial maps, channel-major row-major storage.
// A well-formed set holds non-negative channels that each sum to 1 (within 1e-6);
// the loss routines only require matching shapes and finite values so that
// finite-difference probes may perturb single pixels.
struct HeatmapSet {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<double> values;  // channels * height * width

    int pixels() const { return height * width; }
    double& at(int c, int p) { return values[static_cast<std::size_t>(c) * pixels() + p]; }
    double at(int c, int p) const { return values[static_cast<std::size_t>(c) * pixels() + p]; }
};

// Largest per-channel deviation of the channel sum from 1; negative values fail too.
bool heatmaps_normalized(const HeatmapSet& maps, double tol = 1e-6);

struct LossConfig {
    double alpha = 5.0;   // weight of the heatmap term in the total
    double beta = 15.0;   // foreground emphasis
    double floor = 1e-12; // predictions are clamped here before the log
};

// W = (beta*y + 1)^y elementwise: 1 on background, (beta+1) at y == 1.
HeatmapSet foreground_weights(const HeatmapSet& gt, double beta);

struct LossResult {
    double value = 0.0;
    std::vector<double> gradient;  // d value / d prediction, same layout as the input
};

// Foreground-weighted KL divergence averaged over channels:
//   (1/C) * sum_jk W_jk * y_jk * log(y_jk / max(yhat_jk, floor)),
// with 0 * log(0/.) taken as 0. Gradient is -W*y / (C * clamped yhat),
// zero where the clamp is active.
LossResult heatmap_loss(const HeatmapSet& pred, const HeatmapSet& gt, const LossConfig& cfg);

// Mean absolute coordinate error over flattened landmark coordinates.
// Subgradient sign(pred - gt)/N, zero at equality.
LossResult landmark_loss(const std::vector<double>& pred, const std::vector<double>& gt);

double total_loss(double heatmap_value, double landmark_value, const LossConfig& cfg);

struct FiniteDiffReport {
    double max_rel_err = 0.0;
    double mean_rel_err = 0.0;
    int n_coords = 0;  // coordinates actually checked (exclusions removed)
};

using ValueGradFn =
    std::function<std::pair<double, std::vector<double>>(const std::vector<double>&)>;

// Central differences (f(x+h) - f(x-h)) / 2h against the analytic gradient.
// Relative error per coordinate is |fd - g| / max(|fd|, |g|), 0 when both vanish.
// exclude[i] != 0 skips coordinate i (callers drop points near kinks).
FiniteDiffReport finite_diff_check(const ValueGradFn& fn, std::vector<double> x, double h,
                                   const std::vector<char>* exclude = nullptr);

// Isotropic Gaussian ground truth (sigma in pixels), each channel normalized to
// sum 1. centers holds one (x, y) pair per channel.
HeatmapSet gaussian_heatmaps(int channels, int height, int width,
                             const std::vector<std::pair<double, double>>& centers,
                             double sigma = 2.0);

}  // namespace cobbkit
