#include "cobbkit/loss.hpp"

#include <algorithm>
#include <cmath>

#include "cobbkit/error.hpp"

namespace cobbkit {

namespace {

void check_set(const HeatmapSet& m, const char* what) {
    if (m.channels <= 0 || m.height <= 0 || m.width <= 0)
        throw ShapeError(std::string(what) + ": empty heatmap set");
    if (m.values.size() != static_cast<std::size_t>(m.channels) * m.pixels())
        throw ShapeError(std::string(what) + ": value count does not match the shape");
    for (double v : m.values)
        if (!std::isfinite(v)) throw ValueError(std::string(what) + ": non-finite value");
}

void check_same_shape(const HeatmapSet& a, const HeatmapSet& b) {
    if (a.channels != b.channels || a.height != b.height || a.width != b.width)
        throw ShapeError("prediction and ground truth shapes differ");
}

}  // namespace

bool heatmaps_normalized(const HeatmapSet& maps, double tol) {
    check_set(maps, "heatmaps");
    for (int c = 0; c < maps.channels; ++c) {
        double sum = 0.0;
        for (int p = 0; p < maps.pixels(); ++p) {
            const double v = maps.at(c, p);
            if (v < 0.0) return false;
            sum += v;
        }
        if (std::abs(sum - 1.0) > tol) return false;
    }
    return true;
}

HeatmapSet foreground_weights(const HeatmapSet& gt, double beta) {
    check_set(gt, "ground truth");
    if (!(beta >= 0.0)) throw ValueError("beta must be >= 0");
    HeatmapSet w = gt;
    for (double& v : w.values) {
        if (v < 0.0) throw ValueError("ground truth values must be >= 0");
        v = std::pow(beta * v + 1.0, v);
    }
    return w;
}

LossResult heatmap_loss(const HeatmapSet& pred, const HeatmapSet& gt, const LossConfig& cfg) {
    check_set(pred, "prediction");
    check_set(gt, "ground truth");
    check_same_shape(pred, gt);
    if (!(cfg.floor > 0.0)) throw ValueError("floor must be > 0");

    const HeatmapSet w = foreground_weights(gt, cfg.beta);
    const double inv_n = 1.0 / gt.channels;

    LossResult out;
    out.gradient.assign(pred.values.size(), 0.0);
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.values.size(); ++i) {
        const double y = gt.values[i];
        if (y == 0.0) continue;  // 0 * log(0/x) contributes nothing
        const double clamped = std::max(pred.values[i], cfg.floor);
        acc += w.values[i] * y * std::log(y / clamped);
        if (pred.values[i] >= cfg.floor)
            out.gradient[i] = -w.values[i] * y * inv_n / clamped;
    }
    out.value = acc * inv_n;
    return out;
}

LossResult landmark_loss(const std::vector<double>& pred, const std::vector<double>& gt) {
    if (pred.size() != gt.size() || pred.empty())
        throw ShapeError("landmark vectors must be non-empty and the same length");
    const double inv_n = 1.0 / static_cast<double>(pred.size());
    LossResult out;
    out.gradient.assign(pred.size(), 0.0);
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (!std::isfinite(pred[i]) || !std::isfinite(gt[i]))
            throw ValueError("non-finite landmark coordinate");
        const double d = pred[i] - gt[i];
        acc += std::abs(d);
        if (d > 0.0)
            out.gradient[i] = inv_n;
        else if (d < 0.0)
            out.gradient[i] = -inv_n;
    }
    out.value = acc * inv_n;
    return out;
}

double total_loss(double heatmap_value, double landmark_value, const LossConfig& cfg) {
    if (!(cfg.alpha >= 0.0)) throw ValueError("alpha must be >= 0");
    return cfg.alpha * heatmap_value + landmark_value;
}

FiniteDiffReport finite_diff_check(const ValueGradFn& fn, std::vector<double> x, double h,
                                   const std::vector<char>* exclude) {
    if (!(h > 0.0)) throw ValueError("step size must be > 0");
    if (exclude && exclude->size() != x.size())
        throw ShapeError("exclusion mask length does not match the point");

    const std::vector<double> grad = fn(x).second;
    if (grad.size() != x.size()) throw ShapeError("gradient length does not match the point");

    FiniteDiffReport rep;
    double sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (exclude && (*exclude)[i]) continue;
        const double xi = x[i];
        x[i] = xi + h;
        const double fp = fn(x).first;
        x[i] = xi - h;
        const double fm = fn(x).first;
        x[i] = xi;
        const double fd = (fp - fm) / (2.0 * h);
        const double denom = std::max(std::abs(fd), std::abs(grad[i]));
        const double rel = denom == 0.0 ? 0.0 : std::abs(fd - grad[i]) / denom;
        rep.max_rel_err = std::max(rep.max_rel_err, rel);
        sum += rel;
        ++rep.n_coords;
    }
    rep.mean_rel_err = rep.n_coords ? sum / rep.n_coords : 0.0;
    return rep;
}

HeatmapSet gaussian_heatmaps(int channels, int height, int width,
                             const std::vector<std::pair<double, double>>& centers,
                             double sigma) {
    if (channels <= 0 || height <= 0 || width <= 0) throw ShapeError("empty heatmap shape");
    if (static_cast<int>(centers.size()) != channels)
        throw ShapeError("need one center per channel");
    if (!(sigma > 0.0)) throw ValueError("sigma must be > 0");

    HeatmapSet out;
    out.channels = channels;
    out.height = height;
    out.width = width;
    out.values.assign(static_cast<std::size_t>(channels) * height * width, 0.0);
    const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
    for (int c = 0; c < channels; ++c) {
        double sum = 0.0;
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x) {
                const double dx = x - centers[c].first;
                const double dy = y - centers[c].second;
                const double g = std::exp(-(dx * dx + dy * dy) * inv2s2);
                out.at(c, y * width + x) = g;
                sum += g;
            }
        for (int p = 0; p < height * width; ++p) out.at(c, p) /= sum;
    }
    return out;
}

}  // namespace cobbkit
