#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <vector>

#include <json.hpp>

#include "cobbkit/error.hpp"
#include "cobbkit/frem.hpp"
#include "cobbkit/rng.hpp"

using namespace cobbkit;

namespace {

FeatureTensor random_tensor(int c, int h, int w, std::uint64_t seed) {
    FeatureTensor t;
    t.channels = c;
    t.height = h;
    t.width = w;
    t.values.resize(static_cast<std::size_t>(c) * h * w);
    SeededRng rng(seed);
    for (double& v : t.values) v = rng.uniform(-1.0, 1.0);
    return t;
}

// perm[r] = source channel of new row r.
FeatureTensor permute_channels(const FeatureTensor& t, const std::vector<int>& perm) {
    FeatureTensor out = t;
    for (int r = 0; r < t.channels; ++r)
        for (int p = 0; p < t.positions(); ++p) out.at(r, p) = t.at(perm[r], p);
    return out;
}

Mat permute_square(const Mat& m, const std::vector<int>& perm) {
    Mat out(m.rows, m.cols);
    for (int r = 0; r < m.rows; ++r)
        for (int c = 0; c < m.cols; ++c) out.at(r, c) = m.at(perm[r], perm[c]);
    return out;
}

std::filesystem::path temp_path(const char* name) {
    return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("rows_are_distributions checks sums and signs") {
    Mat m(2, 2);
    m.at(0, 0) = 0.25;
    m.at(0, 1) = 0.75;
    m.at(1, 0) = 1.0;
    m.at(1, 1) = 0.0;
    CHECK(rows_are_distributions(m));

    m.at(1, 1) = 0.5;
    CHECK_FALSE(rows_are_distributions(m));

    m.at(1, 0) = 1.5;
    m.at(1, 1) = -0.5;
    CHECK_FALSE(rows_are_distributions(m));
}

TEST_CASE("attention rows are probability distributions") {
    for (int c : {1, 2, 68}) {
        const FeatureTensor fx = random_tensor(c, 2, 3, 11 + c);
        const FeatureTensor fy = random_tensor(c, 2, 3, 23 + c);
        const Mat self = attention_map(fx, fx);
        const Mat cross = attention_map(fx, fy);
        CHECK(self.rows == 6);
        CHECK(self.cols == 6);
        CHECK(rows_are_distributions(self));
        CHECK(rows_are_distributions(cross));
    }
}

TEST_CASE("all-zero features give exactly uniform attention rows") {
    FeatureTensor z;
    z.channels = 3;
    z.height = 4;
    z.width = 4;
    z.values.assign(3 * 16, 0.0);
    const Mat s = attention_map(z, z);
    for (double v : s.v) CHECK(v == 1.0 / 16.0);
}

TEST_CASE("fused map is the gain-weighted sum and unit selectors pass maps through") {
    const FeatureTensor fx = random_tensor(3, 2, 2, 5);
    const FeatureTensor fy = random_tensor(3, 2, 2, 6);
    const Mat a = attention_map(fx, fx);
    const Mat b = attention_map(fy, fy);
    const Mat c = attention_map(fx, fy);

    CHECK(fuse_attention(a, b, c, {1.0, 0.0, 0.0}).v == a.v);
    CHECK(fuse_attention(a, b, c, {0.0, 1.0, 0.0}).v == b.v);
    CHECK(fuse_attention(a, b, c, {0.0, 0.0, 1.0}).v == c.v);

    const Mat mix = fuse_attention(a, b, c, {0.5, 0.25, 0.25});
    for (std::size_t i = 0; i < mix.v.size(); ++i)
        CHECK(mix.v[i] == 0.5 * a.v[i] + 0.25 * b.v[i] + 0.25 * c.v[i]);

    Mat wrong(3, 3);
    CHECK_THROWS_AS(fuse_attention(a, b, wrong, {1.0, 1.0, 1.0}), ShapeError);
}

TEST_CASE("geometric residual matches hand arithmetic on one channel") {
    FeatureTensor fo;
    fo.channels = 1;
    fo.height = 1;
    fo.width = 2;
    fo.values = {0.8, -0.3};
    Mat s(2, 2);
    s.at(0, 0) = 0.6;
    s.at(0, 1) = 0.4;
    s.at(1, 0) = 0.1;
    s.at(1, 1) = 0.9;
    const double lambda = 0.7;
    const FeatureTensor out = geometric_features(fo, s, lambda);
    CHECK(out.values[0] == lambda * (0.6 * 0.8 + 0.4 * -0.3) + 0.8);
    CHECK(out.values[1] == lambda * (0.1 * 0.8 + 0.9 * -0.3) + -0.3);

    // zero gain leaves the features untouched bit for bit
    CHECK(geometric_features(fo, s, 0.0).values == fo.values);

    Mat bad(3, 3);
    CHECK_THROWS_AS(geometric_features(fo, bad, lambda), ShapeError);
}

TEST_CASE("semantic residual matches hand arithmetic on one position") {
    FeatureTensor fg;
    fg.channels = 2;
    fg.height = 1;
    fg.width = 1;
    fg.values = {0.5, -1.25};
    Mat v(2, 2);
    v.at(0, 0) = 0.7;
    v.at(0, 1) = 0.3;
    v.at(1, 0) = 0.2;
    v.at(1, 1) = 0.8;
    const double gamma = -0.4;
    const FeatureTensor out = semantic_features(fg, v, gamma);
    // two summands accumulate smaller value first
    auto two_sum = [](double x, double y) { return x <= y ? x + y : y + x; };
    CHECK(out.values[0] == gamma * two_sum(0.7 * 0.5, 0.3 * -1.25) + 0.5);
    CHECK(out.values[1] == gamma * two_sum(0.2 * 0.5, 0.8 * -1.25) + -1.25);

    CHECK(semantic_features(fg, v, 0.0).values == fg.values);

    Mat bad(3, 3);
    CHECK_THROWS_AS(semantic_features(fg, bad, gamma), ShapeError);
}

TEST_CASE("channel attention with identity projections matches hand softmax") {
    FeatureTensor fg;
    fg.channels = 2;
    fg.height = 1;
    fg.width = 2;
    fg.values = {1.0, 0.0, 0.0, 1.0};
    Mat eye(2, 2);
    eye.at(0, 0) = 1.0;
    eye.at(1, 1) = 1.0;
    const Mat v = channel_attention(fg, eye, eye);
    CHECK(rows_are_distributions(v));
    // logits per row are [1, 0] on the diagonal; softmax with max subtraction
    const double em1 = std::exp(-1.0);
    const double denom = em1 + 1.0;
    CHECK(v.at(0, 0) == 1.0 / denom);
    CHECK(v.at(0, 1) == em1 / denom);
    CHECK(v.at(1, 0) == em1 / denom);
    CHECK(v.at(1, 1) == 1.0 / denom);

    Mat bad(3, 3);
    CHECK_THROWS_AS(channel_attention(fg, bad, eye), ShapeError);
    CHECK_THROWS_AS(channel_attention(fg, eye, bad), ShapeError);
}

TEST_CASE("forward pass emits normalized heatmaps and one landmark pair per channel") {
    FremParams p = default_frem_params(4, 3, 3, 77);
    p.lambda = 0.35;
    p.gamma = 0.2;
    const FeatureTensor fin = random_tensor(4, 3, 3, 101);
    const FeatureTensor fout = random_tensor(4, 3, 3, 102);
    const FremOutput out = frem_forward(fin, fout, p);
    CHECK(out.landmarks.size() == 8);
    CHECK(out.heatmaps.channels == 4);
    CHECK(out.heatmaps.height == 3);
    CHECK(out.heatmaps.width == 3);
    CHECK(heatmaps_normalized(out.heatmaps));

    // repeat runs are bit identical
    const FremOutput again = frem_forward(fin, fout, p);
    CHECK(again.landmarks == out.landmarks);
    CHECK(again.heatmaps.values == out.heatmaps.values);
}

TEST_CASE("zero residual gains make the downstream parameters irrelevant") {
    const FeatureTensor fin = random_tensor(3, 2, 3, 301);
    const FeatureTensor fout = random_tensor(3, 2, 3, 302);

    // lambda 0 drops the fused map, so the map gains cannot matter
    FremParams a = default_frem_params(3, 2, 3, 40);
    a.lambda = 0.0;
    a.gamma = 0.3;
    FremParams b = a;
    b.map_gains = {-2.0, 0.5, 9.0};
    const FremOutput ra = frem_forward(fin, fout, a);
    const FremOutput rb = frem_forward(fin, fout, b);
    CHECK(ra.landmarks == rb.landmarks);
    CHECK(ra.heatmaps.values == rb.heatmaps.values);

    // gamma 0 drops the channel attention, so its projections cannot matter
    FremParams c = default_frem_params(3, 2, 3, 41);
    c.lambda = 0.45;
    c.gamma = 0.0;
    FremParams d = c;
    SeededRng rng(42);
    for (double& v : d.g1_proj.v) v = rng.uniform(-1.0, 1.0);
    for (double& v : d.g2_proj.v) v = rng.uniform(-1.0, 1.0);
    const FremOutput rc = frem_forward(fin, fout, c);
    const FremOutput rd = frem_forward(fin, fout, d);
    CHECK(rc.landmarks == rd.landmarks);
    CHECK(rc.heatmaps.values == rd.heatmaps.values);
}

TEST_CASE("consistently permuting channels permutes the outputs bit for bit") {
    const int c = 5;
    FremParams p = default_frem_params(c, 2, 3, 88);
    p.lambda = 0.37;
    p.gamma = -0.21;
    p.map_gains = {0.5, 0.3, 0.2};
    const FeatureTensor fin = random_tensor(c, 2, 3, 501);
    const FeatureTensor fout = random_tensor(c, 2, 3, 502);
    const FremOutput base = frem_forward(fin, fout, p);

    const std::vector<int> perm = {3, 0, 4, 1, 2};
    FremParams q = p;
    q.input_proj = permute_square(p.input_proj, perm);
    q.output_proj = permute_square(p.output_proj, perm);
    q.g1_proj = permute_square(p.g1_proj, perm);
    q.g2_proj = permute_square(p.g2_proj, perm);
    const FremOutput shuffled =
        frem_forward(permute_channels(fin, perm), permute_channels(fout, perm), q);

    for (int r = 0; r < c; ++r) {
        CHECK(shuffled.landmarks[2 * r] == base.landmarks[2 * perm[r]]);
        CHECK(shuffled.landmarks[2 * r + 1] == base.landmarks[2 * perm[r] + 1]);
        for (int pos = 0; pos < 6; ++pos)
            CHECK(shuffled.heatmaps.at(r, pos) == base.heatmaps.at(perm[r], pos));
    }
}

TEST_CASE("default parameters are reproducible from the seed") {
    const FremParams a = default_frem_params(4, 2, 2, 9001);
    const FremParams b = default_frem_params(4, 2, 2, 9001);
    CHECK(a.input_proj.v == b.input_proj.v);
    CHECK(a.output_proj.v == b.output_proj.v);
    CHECK(a.g1_proj.v == b.g1_proj.v);
    CHECK(a.g2_proj.v == b.g2_proj.v);
    CHECK(a.head_x == b.head_x);
    CHECK(a.head_y == b.head_y);
    CHECK(a.map_gains == b.map_gains);

    const FremParams other = default_frem_params(4, 2, 2, 9002);
    CHECK(a.input_proj.v != other.input_proj.v);

    CHECK_THROWS_AS(default_frem_params(0, 2, 2, 1), ShapeError);
}

TEST_CASE("tensor container round trips bit for bit") {
    const auto path = temp_path("cobbkit_frem_tensor.bin");
    const FeatureTensor t = random_tensor(3, 4, 5, 777);
    save_tensor(t, path.string());
    const FeatureTensor back = load_tensor(path.string());
    CHECK(back.channels == 3);
    CHECK(back.height == 4);
    CHECK(back.width == 5);
    CHECK(back.values == t.values);
    std::filesystem::remove(path);
}

TEST_CASE("parameter container round trips bit for bit") {
    const auto path = temp_path("cobbkit_frem_params.bin");
    FremParams p = default_frem_params(3, 2, 4, 31337);
    p.map_gains = {0.25, -1.5, 3.0};
    p.lambda = 0.125;
    p.gamma = -0.75;
    p.head_offset = {1.5, -2.5};
    save_params(p, path.string());
    const FremParams back = load_params(path.string());
    CHECK(back.channels == p.channels);
    CHECK(back.height == p.height);
    CHECK(back.width == p.width);
    CHECK(back.input_proj.v == p.input_proj.v);
    CHECK(back.output_proj.v == p.output_proj.v);
    CHECK(back.map_gains == p.map_gains);
    CHECK(back.lambda == p.lambda);
    CHECK(back.g1_proj.v == p.g1_proj.v);
    CHECK(back.g2_proj.v == p.g2_proj.v);
    CHECK(back.gamma == p.gamma);
    CHECK(back.head_x == p.head_x);
    CHECK(back.head_y == p.head_y);
    CHECK(back.head_offset == p.head_offset);
    std::filesystem::remove(path);
}

TEST_CASE("malformed containers are rejected") {
    const auto path = temp_path("cobbkit_frem_bad.bin");
    const FeatureTensor t = random_tensor(2, 2, 2, 999);

    SUBCASE("missing file") { CHECK_THROWS_AS(load_tensor(path.string()), Error); }

    SUBCASE("bad magic") {
        save_tensor(t, path.string());
        {
            std::fstream f(path, std::ios::binary | std::ios::in | std::ios::out);
            f.write("XRAY", 4);
        }
        CHECK_THROWS_WITH_AS(load_tensor(path.string()),
                             doctest::Contains("not a FREM container"), ParseError);
    }

    SUBCASE("zero dimension in the header") {
        save_tensor(t, path.string());
        {
            std::fstream f(path, std::ios::binary | std::ios::in | std::ios::out);
            f.seekp(4);
            const std::uint32_t zero = 0;
            f.write(reinterpret_cast<const char*>(&zero), 4);
        }
        CHECK_THROWS_WITH_AS(load_tensor(path.string()), doctest::Contains("bad FREM header"),
                             ParseError);
    }

    SUBCASE("truncated payload") {
        save_tensor(t, path.string());
        std::filesystem::resize_file(path, std::filesystem::file_size(path) - 5);
        CHECK_THROWS_WITH_AS(load_tensor(path.string()), doctest::Contains("truncated"),
                             ParseError);
    }

    SUBCASE("trailing bytes") {
        save_tensor(t, path.string());
        {
            std::ofstream f(path, std::ios::binary | std::ios::app);
            f.write("x", 1);
        }
        CHECK_THROWS_WITH_AS(load_tensor(path.string()), doctest::Contains("trailing bytes"),
                             ParseError);
    }

    SUBCASE("truncated parameter block") {
        save_params(default_frem_params(2, 2, 2, 5), path.string());
        std::filesystem::resize_file(path, std::filesystem::file_size(path) - 8);
        CHECK_THROWS_WITH_AS(load_params(path.string()), doctest::Contains("truncated"),
                             ParseError);
    }

    std::filesystem::remove(path);
}

TEST_CASE("shape and value errors on malformed operands") {
    const FeatureTensor a = random_tensor(2, 2, 2, 1);
    const FeatureTensor b = random_tensor(3, 2, 2, 2);
    CHECK_THROWS_AS(attention_map(a, b), ShapeError);

    FeatureTensor nan = a;
    nan.values[1] = std::nan("");
    CHECK_THROWS_AS(attention_map(nan, nan), ValueError);

    FeatureTensor short_values = a;
    short_values.values.pop_back();
    CHECK_THROWS_AS(attention_map(short_values, short_values), ShapeError);

    const FremParams p = default_frem_params(2, 2, 2, 3);
    CHECK_THROWS_AS(frem_forward(a, b, p), ShapeError);
    CHECK_THROWS_AS(frem_forward(b, b, p), ShapeError);

    FremParams bad_head = p;
    bad_head.head_x.pop_back();
    CHECK_THROWS_AS(frem_forward(a, a, bad_head), ShapeError);
}

TEST_CASE("debug json mirrors the container fields") {
    const FeatureTensor t = random_tensor(2, 1, 3, 4242);
    const auto j = nlohmann::json::parse(tensor_debug_json(t));
    CHECK(j["channels"] == 2);
    CHECK(j["height"] == 1);
    CHECK(j["width"] == 3);
    CHECK(j["values"].size() == 6);

    const FremParams p = default_frem_params(2, 1, 3, 4242);
    const auto pj = nlohmann::json::parse(params_debug_json(p));
    CHECK(pj["input_proj"].size() == 4);
    CHECK(pj["head_x"].size() == 3);
    CHECK(pj["map_gains"].size() == 3);
    CHECK(pj["lambda"] == 0.0);
}
