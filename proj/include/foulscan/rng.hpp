#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace foulscan::detail {

// mt19937_64 draws mapped to [0,1) by hand. std::uniform_real_distribution is
// implementation-defined, which would break cross-platform reproducibility of
// seeded fits.
inline double unit_double(std::mt19937_64& g) {
    return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

inline std::size_t pick_index(std::mt19937_64& g, std::size_t n) {
    auto i = static_cast<std::size_t>(unit_double(g) * static_cast<double>(n));
    return i < n ? i : n - 1;
}

}  // namespace foulscan::detail
