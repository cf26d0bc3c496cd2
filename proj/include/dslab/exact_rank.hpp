#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include <gmpxx.h>

#include "combinatorics.hpp"

namespace dslab {

using IntMatrix = std::vector<std::vector<mpz_class>>;

namespace detail {

inline std::uint64_t mulmod(std::uint64_t a, std::uint64_t b, std::uint64_t m) {
    return static_cast<std::uint64_t>(static_cast<unsigned __int128>(a) * b % m);
}

inline std::uint64_t powmod(std::uint64_t a, std::uint64_t e, std::uint64_t m) {
    std::uint64_t r = 1;
    a %= m;
    for (; e; e >>= 1) {
        if (e & 1)
            r = mulmod(r, a, m);
        a = mulmod(a, a, m);
    }
    return r;
}

} // namespace detail

/// Deterministic Miller-Rabin for 64-bit inputs.
inline bool is_prime_u64(std::uint64_t n) {
    if (n < 2)
        return false;
    for (std::uint64_t p : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
        if (n % p == 0)
            return n == p;
    }
    std::uint64_t d = n - 1;
    int r = 0;
    while (!(d & 1)) {
        d >>= 1;
        ++r;
    }
    for (std::uint64_t a : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
        auto x = detail::powmod(a, d, n);
        if (x == 1 || x == n - 1)
            continue;
        bool composite = true;
        for (int i = 1; i < r && composite; ++i) {
            x = detail::mulmod(x, x, n);
            composite = x != n - 1;
        }
        if (composite)
            return false;
    }
    return true;
}

/// A uniformly drawn prime in [2^61, 2^62).
inline std::uint64_t random_prime62(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    while (true) {
        std::uint64_t c = (std::uint64_t{1} << 61) | (rng() & ((std::uint64_t{1} << 61) - 1)) | 1;
        if (is_prime_u64(c))
            return c;
    }
}

/// Rank over GF(p). Never exceeds the rank over Q.
inline std::size_t modular_rank(const IntMatrix& m, std::uint64_t p) {
    const std::size_t rows = m.size();
    const std::size_t cols = rows ? m[0].size() : 0;
    std::vector<std::vector<std::uint64_t>> a(rows, std::vector<std::uint64_t>(cols));
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) {
            mpz_class r;
            mpz_fdiv_r_ui(r.get_mpz_t(), m[i][j].get_mpz_t(), p);
            a[i][j] = r.get_ui();
        }
    std::size_t rank = 0;
    for (std::size_t c = 0; c < cols && rank < rows; ++c) {
        std::size_t piv = rank;
        while (piv < rows && a[piv][c] == 0)
            ++piv;
        if (piv == rows)
            continue;
        std::swap(a[piv], a[rank]);
        auto inv = detail::powmod(a[rank][c], p - 2, p);
        for (std::size_t i = rank + 1; i < rows; ++i) {
            if (a[i][c] == 0)
                continue;
            auto f = detail::mulmod(a[i][c], inv, p);
            for (std::size_t j = c; j < cols; ++j)
                a[i][j] = (a[i][j] + p - detail::mulmod(f, a[rank][j], p)) % p;
        }
        ++rank;
    }
    return rank;
}

/// Rank over Q by fraction-free (Bareiss) elimination.
inline std::size_t bareiss_rank(IntMatrix a) {
    const std::size_t rows = a.size();
    const std::size_t cols = rows ? a[0].size() : 0;
    mpz_class prev = 1;
    std::size_t rank = 0;
    for (std::size_t c = 0; c < cols && rank < rows; ++c) {
        std::size_t piv = rank;
        while (piv < rows && a[piv][c] == 0)
            ++piv;
        if (piv == rows)
            continue;
        std::swap(a[piv], a[rank]);
        for (std::size_t i = rank + 1; i < rows; ++i) {
            for (std::size_t j = c + 1; j < cols; ++j) {
                a[i][j] = a[rank][c] * a[i][j] - a[i][c] * a[rank][j];
                mpz_divexact(a[i][j].get_mpz_t(), a[i][j].get_mpz_t(), prev.get_mpz_t());
            }
            a[i][c] = 0;
        }
        prev = a[rank][c];
        ++rank;
    }
    return rank;
}

struct RankResult {
    std::size_t rank = 0;
    std::uint64_t prime = 0;
    std::size_t modular = 0;
    bool bareiss = false; ///< the modular rank was not maximal and elimination over Z decided
};

/// Rank over Q: modular first, confirmed by Bareiss whenever the modular
/// rank falls short of min(rows, cols).
inline RankResult rank_exact(const IntMatrix& m, std::uint64_t seed = 0) {
    RankResult r;
    r.prime = random_prime62(seed);
    r.modular = modular_rank(m, r.prime);
    const std::size_t full = std::min(m.size(), m.empty() ? std::size_t{0} : m[0].size());
    r.bareiss = r.modular != full;
    r.rank = r.bareiss ? bareiss_rank(m) : r.modular;
    return r;
}

} // namespace dslab
