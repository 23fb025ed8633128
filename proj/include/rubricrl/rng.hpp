#pragma once

#include <cstdint>
#include <random>
#include <sstream>
#include <string>

namespace rubricrl {

// std::mt19937_64's output sequence is fixed by the standard; the
// distribution adaptors are not. These helpers keep draws identical
// across standard libraries.
using Rng = std::mt19937_64;

inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, n) by rejection.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x = rng();
    while (x >= limit) {
        x = rng();
    }
    return x % n;
}

inline std::string rng_state(const Rng& rng) {
    std::ostringstream out;
    out << rng;
    return out.str();
}

inline void restore_rng_state(Rng& rng, const std::string& state) {
    std::istringstream in(state);
    in >> rng;
}

} // namespace rubricrl
