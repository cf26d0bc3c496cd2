#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

namespace dslab {

/// Visit every d-subset of {0..n-1} in lexicographic order. The visitor
/// returns false to stop early; the function returns false if stopped.
template <typename Visitor>
bool for_each_combination(std::size_t n, std::size_t d, Visitor&& visit) {
    if (d > n)
        return true;
    std::vector<std::size_t> idx(d);
    for (std::size_t i = 0; i < d; ++i)
        idx[i] = i;
    while (true) {
        if (!visit(static_cast<const std::vector<std::size_t>&>(idx)))
            return false;
        if (d == 0)
            return true;
        std::size_t i = d;
        while (i > 0 && idx[i - 1] == n - d + (i - 1))
            --i;
        if (i == 0)
            return true;
        ++idx[i - 1];
        for (std::size_t j = i; j < d; ++j)
            idx[j] = idx[j - 1] + 1;
    }
}

/// Binomial coefficient, saturating at the max of uint64.
inline std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
    if (k > n)
        return 0;
    if (k > n - k)
        k = n - k;
    unsigned __int128 r = 1;
    for (std::uint64_t i = 1; i <= k; ++i) {
        r = r * (n - k + i) / i;
        if (r > std::numeric_limits<std::uint64_t>::max())
            return std::numeric_limits<std::uint64_t>::max();
    }
    return static_cast<std::uint64_t>(r);
}

/// Saturating integer power.
inline std::uint64_t saturating_pow(std::uint64_t base, std::uint64_t exp) {
    unsigned __int128 r = 1;
    for (std::uint64_t i = 0; i < exp; ++i) {
        r *= base;
        if (r > std::numeric_limits<std::uint64_t>::max())
            return std::numeric_limits<std::uint64_t>::max();
    }
    return static_cast<std::uint64_t>(r);
}

/// Uniform integer in [0, bound) by rejection, independent of the standard
/// library's distribution implementations so seeds reproduce across toolchains.
template <typename Rng>
std::uint64_t uniform_below(Rng& rng, std::uint64_t bound) {
    if (bound <= 1)
        return 0;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % bound;
}

/// Uniform double in [0,1) with 53 random bits.
template <typename Rng>
double uniform_unit(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

} // namespace dslab
