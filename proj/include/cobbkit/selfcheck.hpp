#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cobbkit/loss.hpp"

namespace cobbkit {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;  // human-readable summary, empty when clean
};

// Attention and residual invariants on seeded random instances
// (C in {2,4,68}, H = W in {4,8}): stochastic rows, exact residual collapse at
// lambda = gamma = 0, exact channel-permutation equivariance, fused-map gain
// selectors, bit-identical repetition.
std::vector<CheckResult> run_frem_checks(std::uint64_t seed, int instances = 100);

struct LossCheckSummary {
    double max_rel_err = 0.0;
    double mean_rel_err = 0.0;
    int n_coords = 0;
    std::uint64_t seed = 0;
    bool passed = false;
};

// Central-difference validation of both loss gradients on seeded instances,
// aggregated across the heatmap (4x8x8, h=1e-6) and landmark (136 coords,
// h=1e-5, tie neighbourhoods excluded) checks. Pass bar: max rel err <= 1e-5.
LossCheckSummary run_loss_checks(std::uint64_t seed, const LossConfig& cfg = {});

// Random tilt profiles (uniform +-25 deg) pushed through cacm_from_tilts and
// oracle_cobb; angles must agree to 1e-9 deg with identical inflections/flags.
CheckResult run_oracle_equivalence(std::uint64_t seed, int profiles = 10000,
                                   double epsilon_rad = 1e-6);

// Jitter-free generate -> tilt recovery -> cacm, against the oracle on the
// requested profile: tilts to 1e-9 rad, angles to 1e-6 deg.
CheckResult run_synth_round_trip(std::uint64_t seed, int spines = 1000);

// Everything above in a fixed order.
std::vector<CheckResult> run_selfcheck(std::uint64_t seed);

}  // namespace cobbkit
