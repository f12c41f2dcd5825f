#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace mbocc {

// Distribution helpers built directly on mt19937_64 so that streams are
// bit-reproducible across standard libraries (std::*_distribution is
// implementation-defined).
inline double uniform_real(std::mt19937_64& rng, double lo = 0.0, double hi = 1.0) {
    double u = (rng() >> 11) * 0x1.0p-53;  // [0, 1)
    return lo + u * (hi - lo);
}

inline int uniform_int(std::mt19937_64& rng, int lo, int hi) {  // inclusive bounds
    std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(rng() % span);
}

inline double gauss(std::mt19937_64& rng, double mean = 0.0, double sigma = 1.0) {
    double u1 = uniform_real(rng);
    double u2 = uniform_real(rng);
    if (u1 < 1e-300) u1 = 1e-300;
    double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    return mean + sigma * z;
}

}  // namespace mbocc
