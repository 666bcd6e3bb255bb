#include "cobbkit/landmarks.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

#include <json.hpp>

#include "cobbkit/error.hpp"
#include "cobbkit/tilt.hpp"

namespace cobbkit {

namespace {

constexpr const char* kCsvHeader = "image_id,vertebra,corner,x,y";
constexpr const char* kCornerNames[kCornersPerVertebra] = {"TL", "TR", "BL", "BR"};

// Shortest representation that parses back to the same double.
std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_strict_double(std::string_view s, long line) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw ParseError("bad numeric field '" + std::string(s) + "'", line);
    if (!std::isfinite(v))
        throw ValueError("non-finite coordinate '" + std::string(s) + "' at line " +
                         std::to_string(line));
    return v;
}

Point& corner_slot(Vertebra& v, int corner) {
    switch (corner) {
        case 0: return v.top_left;
        case 1: return v.top_right;
        case 2: return v.bottom_left;
        default: return v.bottom_right;
    }
}

const Point& corner_slot(const Vertebra& v, int corner) {
    return corner_slot(const_cast<Vertebra&>(v), corner);
}

std::vector<SpineLandmarks> parse_csv(const std::string& bytes) {
    std::vector<SpineLandmarks> images;
    if (bytes.empty()) return images;

    std::istringstream in(bytes);
    std::string linebuf;
    long line = 0;

    if (!std::getline(in, linebuf)) return images;
    ++line;
    if (!linebuf.empty() && linebuf.back() == '\r') linebuf.pop_back();
    if (linebuf != kCsvHeader)
        throw ParseError("expected header '" + std::string(kCsvHeader) + "'", line);

    SpineLandmarks current;
    int row_in_image = 0;  // 0..67 position inside the current image block
    bool open = false;

    auto finish_image = [&]() {
        if (!open) return;
        if (row_in_image != kLandmarkCount)
            throw StructureError("image '" + current.image_id + "' has " +
                                 std::to_string(row_in_image) + " landmark rows, expected " +
                                 std::to_string(kLandmarkCount));
        for (const auto& done : images)
            if (done.image_id == current.image_id)
                throw StructureError("image '" + current.image_id +
                                     "' appears in more than one row group");
        images.push_back(std::move(current));
        current = SpineLandmarks{};
        row_in_image = 0;
        open = false;
    };

    while (std::getline(in, linebuf)) {
        ++line;
        if (!linebuf.empty() && linebuf.back() == '\r') linebuf.pop_back();
        if (linebuf.empty() && in.eof()) break;  // trailing newline

        std::string_view rest(linebuf);
        std::array<std::string_view, 5> field;
        for (int f = 0; f < 5; ++f) {
            auto comma = rest.find(',');
            if (f < 4) {
                if (comma == std::string_view::npos)
                    throw ParseError("expected 5 comma-separated fields", line);
                field[f] = rest.substr(0, comma);
                rest.remove_prefix(comma + 1);
            } else {
                if (comma != std::string_view::npos)
                    throw ParseError("expected 5 comma-separated fields", line);
                field[f] = rest;
            }
        }

        if (open && field[0] != current.image_id) finish_image();
        if (!open) {
            if (field[0].empty()) throw ParseError("empty image_id", line);
            current.image_id = std::string(field[0]);
            current.vertebrae.assign(kVertebraCount, Vertebra{});
            open = true;
        }

        const int expect_vertebra = row_in_image / kCornersPerVertebra;
        const int expect_corner = row_in_image % kCornersPerVertebra;
        if (row_in_image >= kLandmarkCount)
            throw StructureError("image '" + current.image_id + "' has more than " +
                                 std::to_string(kLandmarkCount) + " landmark rows");

        int vertebra = -1;
        auto res = std::from_chars(field[1].data(), field[1].data() + field[1].size(), vertebra);
        if (res.ec != std::errc() || res.ptr != field[1].data() + field[1].size())
            throw ParseError("bad vertebra index '" + std::string(field[1]) + "'", line);
        if (vertebra != expect_vertebra)
            throw ParseError("vertebra " + std::to_string(expect_vertebra) +
                             " expected, found " + std::to_string(vertebra), line);
        if (field[2] != kCornerNames[expect_corner])
            throw ParseError(std::string("corner ") + kCornerNames[expect_corner] +
                             " expected, found '" + std::string(field[2]) + "'", line);

        Vertebra& v = current.vertebrae[vertebra];
        v.index = vertebra;
        Point& p = corner_slot(v, expect_corner);
        p.x = parse_strict_double(field[3], line);
        p.y = parse_strict_double(field[4], line);
        ++row_in_image;
    }
    finish_image();
    return images;
}

std::string serialize_csv(const std::vector<SpineLandmarks>& images) {
    std::string out(kCsvHeader);
    out += '\n';
    for (const auto& sl : images) {
        if (sl.image_id.find_first_of(",\r\n") != std::string::npos)
            throw ValueError("image_id '" + sl.image_id + "' cannot be written as CSV");
        if (static_cast<int>(sl.vertebrae.size()) != kVertebraCount)
            throw StructureError("image '" + sl.image_id + "' has " +
                                 std::to_string(sl.vertebrae.size()) + " vertebrae, expected " +
                                 std::to_string(kVertebraCount));
        for (int vi = 0; vi < kVertebraCount; ++vi) {
            const Vertebra& v = sl.vertebrae[vi];
            for (int c = 0; c < kCornersPerVertebra; ++c) {
                const Point& p = corner_slot(v, c);
                if (!std::isfinite(p.x) || !std::isfinite(p.y))
                    throw ValueError("non-finite coordinate in image '" + sl.image_id + "'");
                out += sl.image_id;
                out += ',';
                out += std::to_string(vi);
                out += ',';
                out += kCornerNames[c];
                out += ',';
                out += format_double(p.x);
                out += ',';
                out += format_double(p.y);
                out += '\n';
            }
        }
    }
    return out;
}

std::vector<SpineLandmarks> parse_json(const std::string& bytes) {
    if (bytes.empty()) return {};
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(bytes);
    } catch (const nlohmann::json::exception& e) {
        // also covers number overflow, which the reader reports as out_of_range
        throw ParseError(std::string("invalid JSON: ") + e.what());
    }
    if (!doc.is_array()) throw ParseError("top-level JSON value must be an array");

    std::vector<SpineLandmarks> images;
    for (const auto& item : doc) {
        if (!item.is_object() || !item.contains("image_id") || !item.contains("landmarks"))
            throw ParseError("each entry needs image_id and landmarks");
        SpineLandmarks sl;
        if (!item["image_id"].is_string()) throw ParseError("image_id must be a string");
        sl.image_id = item["image_id"].get<std::string>();
        if (item.contains("pixel_spacing_mm")) {
            if (!item["pixel_spacing_mm"].is_number())
                throw ParseError("pixel_spacing_mm must be a number in image '" + sl.image_id + "'");
            sl.pixel_spacing_mm = item["pixel_spacing_mm"].get<double>();
        }
        if (!(sl.pixel_spacing_mm > 0.0) || !std::isfinite(sl.pixel_spacing_mm))
            throw ValueError("pixel_spacing_mm must be positive and finite in image '" +
                             sl.image_id + "'");
        const auto& lm = item["landmarks"];
        if (!lm.is_array() || lm.size() != kLandmarkCount)
            throw StructureError("image '" + sl.image_id + "' has " +
                                 std::to_string(lm.is_array() ? lm.size() : 0) +
                                 " landmarks, expected " + std::to_string(kLandmarkCount));
        sl.vertebrae.assign(kVertebraCount, Vertebra{});
        for (int i = 0; i < kLandmarkCount; ++i) {
            const auto& pt = lm[i];
            if (!pt.is_array() || pt.size() != 2 || !pt[0].is_number() || !pt[1].is_number())
                throw ParseError("landmark " + std::to_string(i) + " of image '" + sl.image_id +
                                 "' must be an [x, y] pair");
            const double x = pt[0].get<double>();
            const double y = pt[1].get<double>();
            if (!std::isfinite(x) || !std::isfinite(y))
                throw ValueError("non-finite coordinate in image '" + sl.image_id + "'");
            Vertebra& v = sl.vertebrae[i / kCornersPerVertebra];
            v.index = i / kCornersPerVertebra;
            corner_slot(v, i % kCornersPerVertebra) = Point{x, y};
        }
        for (const auto& done : images)
            if (done.image_id == sl.image_id)
                throw StructureError("image '" + sl.image_id + "' appears more than once");
        images.push_back(std::move(sl));
    }
    return images;
}

std::string serialize_json(const std::vector<SpineLandmarks>& images) {
    nlohmann::ordered_json doc = nlohmann::ordered_json::array();
    for (const auto& sl : images) {
        if (static_cast<int>(sl.vertebrae.size()) != kVertebraCount)
            throw StructureError("image '" + sl.image_id + "' has " +
                                 std::to_string(sl.vertebrae.size()) + " vertebrae, expected " +
                                 std::to_string(kVertebraCount));
        nlohmann::ordered_json entry;
        entry["image_id"] = sl.image_id;
        entry["pixel_spacing_mm"] = sl.pixel_spacing_mm;
        auto lm = nlohmann::ordered_json::array();
        for (const Point& p : flatten(sl)) {
            if (!std::isfinite(p.x) || !std::isfinite(p.y))
                throw ValueError("non-finite coordinate in image '" + sl.image_id + "'");
            lm.push_back({p.x, p.y});
        }
        entry["landmarks"] = std::move(lm);
        doc.push_back(std::move(entry));
    }
    return doc.dump() + "\n";
}

}  // namespace

std::vector<SpineLandmarks> parse_landmarks(const std::string& bytes, LandmarkFormat format) {
    return format == LandmarkFormat::Csv ? parse_csv(bytes) : parse_json(bytes);
}

std::string serialize_landmarks(const std::vector<SpineLandmarks>& images, LandmarkFormat format) {
    return format == LandmarkFormat::Csv ? serialize_csv(images) : serialize_json(images);
}

std::vector<SpineLandmarks> load_landmarks_file(const std::string& path, LandmarkFormat format) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_landmarks(buf.str(), format);
}

std::vector<SpineLandmarks> load_landmarks_file(const std::string& path) {
    auto dot = path.rfind('.');
    std::string ext = dot == std::string::npos ? "" : path.substr(dot);
    if (ext == ".csv") return load_landmarks_file(path, LandmarkFormat::Csv);
    if (ext == ".json") return load_landmarks_file(path, LandmarkFormat::Json);
    throw Error("cannot infer landmark format from '" + path + "' (use .csv or .json)");
}

std::vector<std::string> validate(const SpineLandmarks& sl) {
    std::vector<std::string> warnings;
    if (static_cast<int>(sl.vertebrae.size()) != kVertebraCount) {
        warnings.push_back("vertebra count " + std::to_string(sl.vertebrae.size()) +
                           ", expected " + std::to_string(kVertebraCount));
        return warnings;
    }
    constexpr double kTiltLimitRad = 60.0 * kRadPerDeg;
    for (int vi = 0; vi < kVertebraCount; ++vi) {
        const Vertebra& v = sl.vertebrae[vi];
        const std::string tag = "vertebra " + std::to_string(vi);

        const std::pair<const Point*, const Point*> plates[2] = {
            {&v.top_left, &v.top_right}, {&v.bottom_left, &v.bottom_right}};
        const char* plate_name[2] = {"upper", "lower"};
        for (int e = 0; e < 2; ++e) {
            const Point& l = *plates[e].first;
            const Point& r = *plates[e].second;
            if (l == r) {
                warnings.push_back(tag + ": coincident " + plate_name[e] + " endplate landmarks");
                continue;
            }
            const double t = endplate_tilt(l, r);
            if (std::abs(t) > kTiltLimitRad)
                warnings.push_back(tag + ": " + plate_name[e] + " endplate tilt " +
                                   format_double(t * kDegPerRad) + " deg exceeds 60 deg");
        }
        if (v.top_left.x >= v.top_right.x)
            warnings.push_back(tag + ": top corners not left-to-right");
        if (v.bottom_left.x >= v.bottom_right.x)
            warnings.push_back(tag + ": bottom corners not left-to-right");

        const double top_y = 0.5 * (v.top_left.y + v.top_right.y);
        const double bottom_y = 0.5 * (v.bottom_left.y + v.bottom_right.y);
        if (bottom_y - top_y <= 0.0)
            warnings.push_back(tag + ": non-positive height (bottom edge above top edge)");
        if (vi > 0) {
            const Vertebra& up = sl.vertebrae[vi - 1];
            const double up_bottom = 0.5 * (up.bottom_left.y + up.bottom_right.y);
            if (top_y < up_bottom)
                warnings.push_back(tag + ": overlaps vertebra " + std::to_string(vi - 1) +
                                   " (vertical order inversion)");
        }
    }
    return warnings;
}

std::array<Point, kLandmarkCount> flatten(const SpineLandmarks& sl) {
    if (static_cast<int>(sl.vertebrae.size()) != kVertebraCount)
        throw StructureError("image '" + sl.image_id + "' has " +
                             std::to_string(sl.vertebrae.size()) + " vertebrae, expected " +
                             std::to_string(kVertebraCount));
    std::array<Point, kLandmarkCount> out{};
    for (int vi = 0; vi < kVertebraCount; ++vi) {
        const Vertebra& v = sl.vertebrae[vi];
        out[vi * 4 + 0] = v.top_left;
        out[vi * 4 + 1] = v.top_right;
        out[vi * 4 + 2] = v.bottom_left;
        out[vi * 4 + 3] = v.bottom_right;
    }
    return out;
}

}  // namespace cobbkit
