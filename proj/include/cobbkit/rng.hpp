#pragma once

#include <cstdint>
#include <random>

namespace cobbkit {

// Seeded generator used everywhere randomness is needed. uniform() maps the raw
// 64-bit stream through a fixed 53-bit ladder instead of std::uniform_real_distribution,
// so identical seeds give identical doubles on every platform.
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform in [0, 1), 53 random bits.
    double unit() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

    // Uniform integer in [0, n), n > 0. Modulo bias is irrelevant at our scales.
    std::uint64_t below(std::uint64_t n) { return gen_() % n; }

private:
    std::mt19937_64 gen_;
};

}  // namespace cobbkit
