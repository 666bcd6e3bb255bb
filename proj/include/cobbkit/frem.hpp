#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "cobbkit/loss.hpp"

namespace cobbkit {

// Dense C x (H*W) feature block, channel-major row-major, doubles throughout.
struct FeatureTensor {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<double> values;  // channels * height * width

    int positions() const { return height * width; }
    double& at(int c, int n) { return values[static_cast<std::size_t>(c) * positions() + n]; }
    double at(int c, int n) const { return values[static_cast<std::size_t>(c) * positions() + n]; }
};

// Small dense row-major matrix; used for attention maps and projections.
struct Mat {
    int rows = 0;
    int cols = 0;
    std::vector<double> v;

    Mat() = default;
    Mat(int r, int c) : rows(r), cols(c), v(static_cast<std::size_t>(r) * c, 0.0) {}
    double& at(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
    double at(int r, int c) const { return v[static_cast<std::size_t>(r) * cols + c]; }
};

bool rows_are_distributions(const Mat& m, double tol = 1e-9);

struct FremParams {
    int channels = 0;
    int height = 0;
    int width = 0;
    Mat input_proj;                    // C x C
    Mat output_proj;                   // C x C
    std::array<double, 3> map_gains{}; // fused-map selectors
    double lambda = 0.0;               // geometric residual gain
    Mat g1_proj;                       // C x C
    Mat g2_proj;                       // C x C
    double gamma = 0.0;                // semantic residual gain
    std::vector<double> head_x;        // N
    std::vector<double> head_y;        // N
    std::array<double, 2> head_offset{};
};

// Identity-plus-0.01*uniform noise projections, unit map gains, zero lambda/gamma,
// small seeded head. Same seed, same params, bit for bit.
FremParams default_frem_params(int channels, int height, int width, std::uint64_t seed);

// Row j holds softmax over i of dot(fx[:, i], fy[:, j]); every row is a
// probability distribution, all-zero features give uniform rows. Reductions over
// the channel axis are accumulated in value order, so consistently permuting
// channels of inputs and parameters leaves every output bit identical.
Mat attention_map(const FeatureTensor& fx, const FeatureTensor& fy);

// gains[0]*au1 + gains[1]*au2 + gains[2]*cr, elementwise; not row-stochastic.
Mat fuse_attention(const Mat& au1, const Mat& au2, const Mat& cr,
                   const std::array<double, 3>& gains);

// F_G[:, j] = lambda * sum_i s[j, i] * fo[:, i] + fo[:, j].
FeatureTensor geometric_features(const FeatureTensor& fo_hat, const Mat& s_total, double lambda);

// Row j holds softmax over i of dot(g1_proj*fg row i, g2_proj*fg row j); C x C.
Mat channel_attention(const FeatureTensor& fg, const Mat& g1_proj, const Mat& g2_proj);

// F_S[j, :] = gamma * sum_i v[j, i] * fg[i, :] + fg[j, :].
FeatureTensor semantic_features(const FeatureTensor& fg, const Mat& v, double gamma);

struct FremOutput {
    std::vector<double> landmarks;  // C x 2 row-major (x, y per channel)
    HeatmapSet heatmaps;            // per-channel spatial softmax of the semantic features
};

// Full forward pass: project both inputs, build the three position-attention
// maps (self on each projection, cross input->output), fuse, apply the
// geometric then semantic residuals, map each channel through the shared
// linear head, and softmax-normalize each channel into a heatmap.
FremOutput frem_forward(const FeatureTensor& f_input, const FeatureTensor& f_output,
                        const FremParams& params);

// Flat binary container: magic "FREM", little-endian u32 C,H,W, then f64 payload
// row-major. Tensors store C*H*W values; params store the projection/gain/head
// block in declaration order. JSON debug forms mirror the same fields.
void save_tensor(const FeatureTensor& t, const std::string& path);
FeatureTensor load_tensor(const std::string& path);
void save_params(const FremParams& p, const std::string& path);
FremParams load_params(const std::string& path);
std::string tensor_debug_json(const FeatureTensor& t);
std::string params_debug_json(const FremParams& p);

}  // namespace cobbkit
