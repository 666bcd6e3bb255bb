#pragma once

#include <array>
#include <string>
#include <vector>

namespace cobbkit {

inline constexpr int kVertebraCount = 17;
inline constexpr int kCornersPerVertebra = 4;
inline constexpr int kLandmarkCount = kVertebraCount * kCornersPerVertebra;  // 68

// Pixel coordinates, y grows downward (image convention).
struct Point {
    double x = 0.0;
    double y = 0.0;
    bool operator==(const Point&) const = default;
};

// One vertebral body. Corner names describe the anatomical layout on screen;
// the parser never re-sorts them, validate() flags geometric violations.
struct Vertebra {
    int index = 0;  // 0 = most cranial
    Point top_left;
    Point top_right;
    Point bottom_left;
    Point bottom_right;
    bool operator==(const Vertebra&) const = default;
};

struct SpineLandmarks {
    std::string image_id;
    std::vector<Vertebra> vertebrae;  // exactly kVertebraCount, cranial to caudal
    double pixel_spacing_mm = 1.0;
    bool operator==(const SpineLandmarks&) const = default;
};

enum class LandmarkFormat { Csv, Json };

// CSV: header "image_id,vertebra,corner,x,y", corners TL,TR,BL,BR, vertebrae 0..16
// ascending, rows grouped by image_id. JSON: array of {image_id, pixel_spacing_mm,
// landmarks: [[x, y] x 68]} in the same vertebra-major corner order.
// Throws ParseError (with line number for CSV), StructureError (bad counts or
// grouping, names the image), ValueError (non-finite coordinate, bad spacing).
std::vector<SpineLandmarks> parse_landmarks(const std::string& bytes, LandmarkFormat format);

// Canonical form: shortest round-trip float formatting, LF line endings, '.' decimal.
// parse(serialize(x)) == x and serialize(parse(s)) == s for canonical s.
std::string serialize_landmarks(const std::vector<SpineLandmarks>& images, LandmarkFormat format);

// Reads a landmark file, picking the format from the extension (.csv/.json).
std::vector<SpineLandmarks> load_landmarks_file(const std::string& path);
std::vector<SpineLandmarks> load_landmarks_file(const std::string& path, LandmarkFormat format);

// Plausibility warnings only, never errors and never mutations: endplate tilt
// beyond 60 deg, non-positive vertebra height, left/right corner inversion,
// vertical order inversion between neighbours, coincident endplate landmarks.
std::vector<std::string> validate(const SpineLandmarks& sl);

// The 68 landmarks in file order (vertebra-major, TL,TR,BL,BR).
std::array<Point, kLandmarkCount> flatten(const SpineLandmarks& sl);

}  // namespace cobbkit
