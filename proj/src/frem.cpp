#include "cobbkit/frem.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "cobbkit/error.hpp"
#include "cobbkit/rng.hpp"

static_assert(std::endian::native == std::endian::little,
              "binary containers assume a little-endian host");

namespace cobbkit {

namespace {

void check_tensor(const FeatureTensor& t, const char* what) {
    if (t.channels <= 0 || t.height <= 0 || t.width <= 0)
        throw ShapeError(std::string(what) + ": empty tensor");
    if (t.values.size() != static_cast<std::size_t>(t.channels) * t.positions())
        throw ShapeError(std::string(what) + ": value count does not match the shape");
    for (double v : t.values)
        if (!std::isfinite(v)) throw ValueError(std::string(what) + ": non-finite value");
}

void check_square(const Mat& m, int n, const char* what) {
    if (m.rows != n || m.cols != n)
        throw ShapeError(std::string(what) + ": expected " + std::to_string(n) + "x" +
                         std::to_string(n) + ", got " + std::to_string(m.rows) + "x" +
                         std::to_string(m.cols));
}

// Accumulation in sorted value order: the result depends only on the multiset of
// summands, so reductions over the channel axis are invariant to channel order.
double sum_sorted(std::vector<double>& buf) {
    std::sort(buf.begin(), buf.end());
    double s = 0.0;
    for (double v : buf) s += v;
    return s;
}

// out = proj (n x n) times feats (n rows); reduction over the row index.
std::vector<double> project_rows(const Mat& proj, const std::vector<double>& feats, int n,
                                 int cols) {
    std::vector<double> out(static_cast<std::size_t>(n) * cols, 0.0);
    std::vector<double> buf(n);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < cols; ++c) {
            for (int k = 0; k < n; ++k)
                buf[k] = proj.at(r, k) * feats[static_cast<std::size_t>(k) * cols + c];
            out[static_cast<std::size_t>(r) * cols + c] = sum_sorted(buf);
        }
    return out;
}

// Row-wise softmax with max subtraction; denominators accumulate in sorted
// order so rows indexed by channel stay permutation-consistent.
void softmax_rows(Mat& m) {
    std::vector<double> buf(m.cols);
    for (int r = 0; r < m.rows; ++r) {
        double mx = m.at(r, 0);
        for (int c = 1; c < m.cols; ++c) mx = std::max(mx, m.at(r, c));
        for (int c = 0; c < m.cols; ++c) {
            const double e = std::exp(m.at(r, c) - mx);
            m.at(r, c) = e;
            buf[c] = e;
        }
        const double denom = sum_sorted(buf);
        for (int c = 0; c < m.cols; ++c) m.at(r, c) /= denom;
    }
}

void write_u32(std::ofstream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), 4);
}

std::uint32_t read_u32(std::ifstream& in) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 4);
    return v;
}

void write_doubles(std::ofstream& out, const double* p, std::size_t n) {
    out.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
}

void read_doubles(std::ifstream& in, double* p, std::size_t n) {
    in.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
}

struct Header {
    std::uint32_t c = 0, h = 0, w = 0;
};

void write_header(std::ofstream& out, int c, int h, int w) {
    out.write("FREM", 4);
    write_u32(out, static_cast<std::uint32_t>(c));
    write_u32(out, static_cast<std::uint32_t>(h));
    write_u32(out, static_cast<std::uint32_t>(w));
}

Header read_header(std::ifstream& in, const std::string& path) {
    char magic[4] = {};
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "FREM", 4) != 0)
        throw ParseError("'" + path + "' is not a FREM container");
    Header hd;
    hd.c = read_u32(in);
    hd.h = read_u32(in);
    hd.w = read_u32(in);
    if (!in || hd.c == 0 || hd.h == 0 || hd.w == 0)
        throw ParseError("'" + path + "' has a bad FREM header");
    return hd;
}

std::size_t params_payload(int c, int n) {
    return 4 * static_cast<std::size_t>(c) * c + 2 * static_cast<std::size_t>(n) + 7;
}

}  // namespace

bool rows_are_distributions(const Mat& m, double tol) {
    for (int r = 0; r < m.rows; ++r) {
        double sum = 0.0;
        for (int c = 0; c < m.cols; ++c) {
            if (m.at(r, c) < 0.0) return false;
            sum += m.at(r, c);
        }
        if (std::abs(sum - 1.0) > tol) return false;
    }
    return true;
}

FremParams default_frem_params(int channels, int height, int width, std::uint64_t seed) {
    if (channels <= 0 || height <= 0 || width <= 0) throw ShapeError("empty parameter shape");
    const int n = height * width;
    SeededRng rng(seed);
    auto noisy_identity = [&rng, channels]() {
        Mat m(channels, channels);
        for (int r = 0; r < channels; ++r)
            for (int c = 0; c < channels; ++c)
                m.at(r, c) = (r == c ? 1.0 : 0.0) + 0.01 * rng.uniform(-1.0, 1.0);
        return m;
    };
    FremParams p;
    p.channels = channels;
    p.height = height;
    p.width = width;
    p.input_proj = noisy_identity();
    p.output_proj = noisy_identity();
    p.map_gains = {1.0, 1.0, 1.0};
    p.lambda = 0.0;
    p.g1_proj = noisy_identity();
    p.g2_proj = noisy_identity();
    p.gamma = 0.0;
    p.head_x.resize(n);
    p.head_y.resize(n);
    for (int i = 0; i < n; ++i) p.head_x[i] = 0.01 * rng.uniform(-1.0, 1.0);
    for (int i = 0; i < n; ++i) p.head_y[i] = 0.01 * rng.uniform(-1.0, 1.0);
    p.head_offset = {0.0, 0.0};
    return p;
}

Mat attention_map(const FeatureTensor& fx, const FeatureTensor& fy) {
    check_tensor(fx, "fx");
    check_tensor(fy, "fy");
    if (fx.channels != fy.channels || fx.positions() != fy.positions())
        throw ShapeError("attention operands must share channel count and positions");
    const int c = fx.channels, n = fx.positions();
    Mat s(n, n);
    std::vector<double> buf(c);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            for (int k = 0; k < c; ++k) buf[k] = fx.at(k, i) * fy.at(k, j);
            s.at(j, i) = sum_sorted(buf);
        }
    softmax_rows(s);
    return s;
}

Mat fuse_attention(const Mat& au1, const Mat& au2, const Mat& cr,
                   const std::array<double, 3>& gains) {
    if (au1.rows != au2.rows || au1.rows != cr.rows || au1.cols != au2.cols ||
        au1.cols != cr.cols)
        throw ShapeError("fused maps must share one shape");
    Mat out(au1.rows, au1.cols);
    for (std::size_t i = 0; i < out.v.size(); ++i)
        out.v[i] = gains[0] * au1.v[i] + gains[1] * au2.v[i] + gains[2] * cr.v[i];
    return out;
}

FeatureTensor geometric_features(const FeatureTensor& fo_hat, const Mat& s_total, double lambda) {
    check_tensor(fo_hat, "projected output features");
    const int c = fo_hat.channels, n = fo_hat.positions();
    if (s_total.rows != n || s_total.cols != n)
        throw ShapeError("attention map does not match the tensor positions");
    FeatureTensor out = fo_hat;
    // Reduction over positions; channel order is untouched, plain loops suffice.
    for (int ch = 0; ch < c; ++ch)
        for (int j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int i = 0; i < n; ++i) acc += s_total.at(j, i) * fo_hat.at(ch, i);
            out.at(ch, j) = lambda * acc + fo_hat.at(ch, j);
        }
    return out;
}

Mat channel_attention(const FeatureTensor& fg, const Mat& g1_proj, const Mat& g2_proj) {
    check_tensor(fg, "geometric features");
    const int c = fg.channels, n = fg.positions();
    check_square(g1_proj, c, "g1 projection");
    check_square(g2_proj, c, "g2 projection");
    const std::vector<double> g1 = project_rows(g1_proj, fg.values, c, n);
    const std::vector<double> g2 = project_rows(g2_proj, fg.values, c, n);
    Mat v(c, c);
    for (int j = 0; j < c; ++j)
        for (int i = 0; i < c; ++i) {
            double acc = 0.0;  // over positions, order fixed
            for (int p = 0; p < n; ++p)
                acc += g1[static_cast<std::size_t>(i) * n + p] *
                       g2[static_cast<std::size_t>(j) * n + p];
            v.at(j, i) = acc;
        }
    softmax_rows(v);
    return v;
}

FeatureTensor semantic_features(const FeatureTensor& fg, const Mat& v, double gamma) {
    check_tensor(fg, "geometric features");
    const int c = fg.channels, n = fg.positions();
    check_square(v, c, "channel attention");
    FeatureTensor out = fg;
    std::vector<double> buf(c);
    for (int j = 0; j < c; ++j)
        for (int p = 0; p < n; ++p) {
            for (int i = 0; i < c; ++i) buf[i] = v.at(j, i) * fg.at(i, p);
            out.at(j, p) = gamma * sum_sorted(buf) + fg.at(j, p);
        }
    return out;
}

FremOutput frem_forward(const FeatureTensor& f_input, const FeatureTensor& f_output,
                        const FremParams& params) {
    check_tensor(f_input, "input features");
    check_tensor(f_output, "output features");
    if (f_input.channels != params.channels || f_input.height != params.height ||
        f_input.width != params.width)
        throw ShapeError("input tensor does not match the parameter shape");
    if (f_output.channels != params.channels || f_output.height != params.height ||
        f_output.width != params.width)
        throw ShapeError("output tensor does not match the parameter shape");
    const int c = params.channels, n = params.height * params.width;
    check_square(params.input_proj, c, "input projection");
    check_square(params.output_proj, c, "output projection");
    if (static_cast<int>(params.head_x.size()) != n ||
        static_cast<int>(params.head_y.size()) != n)
        throw ShapeError("head length does not match the positions");

    FeatureTensor fi_hat = f_input;
    fi_hat.values = project_rows(params.input_proj, f_input.values, c, n);
    FeatureTensor fo_hat = f_output;
    fo_hat.values = project_rows(params.output_proj, f_output.values, c, n);

    const Mat au1 = attention_map(fi_hat, fi_hat);
    const Mat au2 = attention_map(fo_hat, fo_hat);
    const Mat cr = attention_map(fi_hat, fo_hat);
    const Mat fused = fuse_attention(au1, au2, cr, params.map_gains);

    const FeatureTensor fg = geometric_features(fo_hat, fused, params.lambda);
    const Mat v = channel_attention(fg, params.g1_proj, params.g2_proj);
    const FeatureTensor fs = semantic_features(fg, v, params.gamma);

    FremOutput out;
    out.landmarks.assign(static_cast<std::size_t>(c) * 2, 0.0);
    for (int ch = 0; ch < c; ++ch) {
        double lx = 0.0, ly = 0.0;  // over positions, order fixed
        for (int p = 0; p < n; ++p) {
            lx += fs.at(ch, p) * params.head_x[p];
            ly += fs.at(ch, p) * params.head_y[p];
        }
        out.landmarks[2 * ch] = lx + params.head_offset[0];
        out.landmarks[2 * ch + 1] = ly + params.head_offset[1];
    }

    out.heatmaps.channels = c;
    out.heatmaps.height = params.height;
    out.heatmaps.width = params.width;
    out.heatmaps.values.assign(fs.values.size(), 0.0);
    for (int ch = 0; ch < c; ++ch) {
        double mx = fs.at(ch, 0);
        for (int p = 1; p < n; ++p) mx = std::max(mx, fs.at(ch, p));
        double denom = 0.0;
        for (int p = 0; p < n; ++p) {
            const double e = std::exp(fs.at(ch, p) - mx);
            out.heatmaps.at(ch, p) = e;
            denom += e;
        }
        for (int p = 0; p < n; ++p) out.heatmaps.at(ch, p) /= denom;
    }
    return out;
}

void save_tensor(const FeatureTensor& t, const std::string& path) {
    check_tensor(t, "tensor");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path + "'");
    write_header(out, t.channels, t.height, t.width);
    write_doubles(out, t.values.data(), t.values.size());
    if (!out) throw Error("short write to '" + path + "'");
}

FeatureTensor load_tensor(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path + "'");
    const Header hd = read_header(in, path);
    FeatureTensor t;
    t.channels = static_cast<int>(hd.c);
    t.height = static_cast<int>(hd.h);
    t.width = static_cast<int>(hd.w);
    t.values.resize(static_cast<std::size_t>(hd.c) * hd.h * hd.w);
    read_doubles(in, t.values.data(), t.values.size());
    if (!in) throw ParseError("'" + path + "' is truncated");
    char extra;
    if (in.read(&extra, 1)) throw ParseError("'" + path + "' has trailing bytes");
    check_tensor(t, "tensor");
    return t;
}

void save_params(const FremParams& p, const std::string& path) {
    const int c = p.channels, n = p.height * p.width;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path + "'");
    write_header(out, p.channels, p.height, p.width);
    write_doubles(out, p.input_proj.v.data(), p.input_proj.v.size());
    write_doubles(out, p.output_proj.v.data(), p.output_proj.v.size());
    write_doubles(out, p.map_gains.data(), 3);
    write_doubles(out, &p.lambda, 1);
    write_doubles(out, p.g1_proj.v.data(), p.g1_proj.v.size());
    write_doubles(out, p.g2_proj.v.data(), p.g2_proj.v.size());
    write_doubles(out, &p.gamma, 1);
    write_doubles(out, p.head_x.data(), p.head_x.size());
    write_doubles(out, p.head_y.data(), p.head_y.size());
    write_doubles(out, p.head_offset.data(), 2);
    if (!out) throw Error("short write to '" + path + "'");
    if (p.input_proj.v.size() != static_cast<std::size_t>(c) * c ||
        static_cast<int>(p.head_x.size()) != n)
        throw ShapeError("parameter block does not match its declared shape");
}

FremParams load_params(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path + "'");
    const Header hd = read_header(in, path);
    const int c = static_cast<int>(hd.c);
    const int n = static_cast<int>(hd.h) * static_cast<int>(hd.w);
    FremParams p;
    p.channels = c;
    p.height = static_cast<int>(hd.h);
    p.width = static_cast<int>(hd.w);
    p.input_proj = Mat(c, c);
    p.output_proj = Mat(c, c);
    p.g1_proj = Mat(c, c);
    p.g2_proj = Mat(c, c);
    p.head_x.resize(n);
    p.head_y.resize(n);
    read_doubles(in, p.input_proj.v.data(), p.input_proj.v.size());
    read_doubles(in, p.output_proj.v.data(), p.output_proj.v.size());
    read_doubles(in, p.map_gains.data(), 3);
    read_doubles(in, &p.lambda, 1);
    read_doubles(in, p.g1_proj.v.data(), p.g1_proj.v.size());
    read_doubles(in, p.g2_proj.v.data(), p.g2_proj.v.size());
    read_doubles(in, &p.gamma, 1);
    read_doubles(in, p.head_x.data(), p.head_x.size());
    read_doubles(in, p.head_y.data(), p.head_y.size());
    read_doubles(in, p.head_offset.data(), 2);
    if (!in) throw ParseError("'" + path + "' is truncated (expected " +
                              std::to_string(params_payload(c, n)) + " doubles)");
    char extra;
    if (in.read(&extra, 1)) throw ParseError("'" + path + "' has trailing bytes");
    return p;
}

std::string tensor_debug_json(const FeatureTensor& t) {
    nlohmann::ordered_json j;
    j["channels"] = t.channels;
    j["height"] = t.height;
    j["width"] = t.width;
    j["values"] = t.values;
    return j.dump();
}

std::string params_debug_json(const FremParams& p) {
    nlohmann::ordered_json j;
    j["channels"] = p.channels;
    j["height"] = p.height;
    j["width"] = p.width;
    j["input_proj"] = p.input_proj.v;
    j["output_proj"] = p.output_proj.v;
    j["map_gains"] = p.map_gains;
    j["lambda"] = p.lambda;
    j["g1_proj"] = p.g1_proj.v;
    j["g2_proj"] = p.g2_proj.v;
    j["gamma"] = p.gamma;
    j["head_x"] = p.head_x;
    j["head_y"] = p.head_y;
    j["head_offset"] = p.head_offset;
    return j.dump();
}

}  // namespace cobbkit
