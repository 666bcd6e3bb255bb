#pragma once

#include <array>
#include <string>
#include <vector>

#include "cobbkit/landmarks.hpp"

namespace cobbkit {

struct LandmarkPair {
    SpineLandmarks pred;
    SpineLandmarks gt;
};

// Matches by image_id; throws StructureError listing ids present on only one
// side, or duplicated within a side. Pixel spacings must agree per image.
std::vector<LandmarkPair> pair_by_image_id(const std::vector<SpineLandmarks>& preds,
                                           const std::vector<SpineLandmarks>& gts);

// Mean squared Euclidean landmark distance in mm^2 (pixels scaled by spacing).
double landmark_mse_mm2(const std::vector<LandmarkPair>& pairs);

// Percentage of landmarks with Euclidean error <= delta_mm (boundary counts).
double sdr_percent(const std::vector<LandmarkPair>& pairs, double delta_mm);

using AngleTriple = std::array<double, 3>;

struct AnglePair {
    AngleTriple pred;
    AngleTriple gt;
};

struct SmapeResult {
    double percent = 0.0;
    int n_images = 0;  // images that entered the mean
    int skipped = 0;   // zero-denominator images left out
};

// Per-image sum|pred-gt| / sum(pred+gt), averaged over images, times 100.
// Images whose denominator is zero are skipped and counted. Angles must be >= 0.
SmapeResult smape_percent(const std::vector<AnglePair>& pairs);

struct AngleErrorStats {
    double cmae_deg = 0.0;  // mean circular distance over all angles
    double ed_deg = 0.0;    // mean per-image L2 of the 3-vector difference
    double md_deg = 0.0;    // mean per-image L1
    double cd_deg = 0.0;    // mean per-image Linf
};

AngleErrorStats angle_errors(const std::vector<AnglePair>& pairs);

// min(|a-g| mod 360, 360 - |a-g| mod 360), degrees.
double circular_distance_deg(double a, double g);

}  // namespace cobbkit
