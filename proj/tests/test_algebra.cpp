#include <gtest/gtest.h>

#include <random>

#include "dslab/algebra.hpp"
#include "oracles.hpp"

using namespace dslab;

namespace {

HypothesisClass cls(int k, std::vector<std::vector<Label>> rows) {
    int n = static_cast<int>(rows[0].size());
    return HypothesisClass(k, n, std::move(rows));
}

IntMatrix ints(std::vector<std::vector<long>> a) {
    IntMatrix m;
    for (auto& r : a) {
        std::vector<mpz_class> row;
        for (long x : r)
            row.emplace_back(x);
        m.push_back(std::move(row));
    }
    return m;
}

std::size_t oracle_rank(const IntMatrix& m) {
    std::vector<std::vector<mpq_class>> q;
    for (const auto& r : m) {
        std::vector<mpq_class> row;
        for (const auto& x : r)
            row.emplace_back(x);
        q.push_back(std::move(row));
    }
    return oracle::rational_rank(q);
}

// rows x cols with rank <= r: product of random rows x r and r x cols
IntMatrix low_rank(std::mt19937_64& rng, std::size_t rows, std::size_t cols, std::size_t r) {
    std::uniform_int_distribution<long> d(-4, 4);
    IntMatrix a(rows, std::vector<mpz_class>(r)), b(r, std::vector<mpz_class>(cols));
    for (auto& row : a)
        for (auto& x : row)
            x = d(rng);
    for (auto& row : b)
        for (auto& x : row)
            x = d(rng);
    IntMatrix m(rows, std::vector<mpz_class>(cols, 0));
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j)
            for (std::size_t t = 0; t < r; ++t)
                m[i][j] += a[i][t] * b[t][j];
    return m;
}

} // namespace

TEST(Primes, MillerRabin) {
    EXPECT_TRUE(is_prime_u64(2));
    EXPECT_TRUE(is_prime_u64(1'000'000'007));
    EXPECT_FALSE(is_prime_u64(1));
    EXPECT_FALSE(is_prime_u64(3215031751ull)); // strong pseudoprime to bases 2, 3, 5, 7
    EXPECT_TRUE(is_prime_u64((1ull << 61) - 1));
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto p = random_prime62(seed);
        EXPECT_GE(p, 1ull << 61);
        EXPECT_LT(p, 1ull << 62);
        EXPECT_TRUE(is_prime_u64(p));
    }
}

TEST(Rank, Examples) {
    EXPECT_EQ(rank_exact(ints({{1, 1}, {1, 2}})).rank, 2u);
    EXPECT_EQ(rank_exact(ints({{1, 1, 1}, {1, 1, 1}, {1, 1, 1}})).rank, 1u);
    EXPECT_EQ(rank_exact(IntMatrix{}).rank, 0u);
    EXPECT_EQ(bareiss_rank(ints({{0, 0}, {0, 3}})), 1u);
}

TEST(Rank, ModularBareissAndRationalAgree) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        std::size_t rows = 1 + rng() % 8, cols = 1 + rng() % 8, r = rng() % 6;
        auto m = low_rank(rng, rows, cols, r);
        auto want = oracle_rank(m);
        auto got = rank_exact(m, rng());
        EXPECT_EQ(got.rank, want);
        EXPECT_EQ(got.modular, want);
        EXPECT_EQ(bareiss_rank(m), want);
        EXPECT_EQ(got.bareiss, want < std::min(rows, cols));
    }
}

TEST(Rank, ModularRankCanUnderestimateButResultStaysExact) {
    // rank 2 over Q, rank 1 modulo p
    auto p = random_prime62(0);
    IntMatrix m{{mpz_class(1), mpz_class(0)}, {mpz_class(0), mpz_class(static_cast<unsigned long>(p))}};
    auto r = rank_exact(m, 0);
    EXPECT_EQ(r.modular, 1u);
    EXPECT_TRUE(r.bareiss);
    EXPECT_EQ(r.rank, 2u);
}

TEST(Monomials, Examples) {
    auto w1 = cls(2, {{1}, {2}});
    auto m = monomial_set(w1, 1, 1);
    ASSERT_EQ(m.size(), 2u);
    EXPECT_EQ(m[0].alpha, std::vector<int>{0});
    EXPECT_EQ(m[1].alpha, std::vector<int>{1});

    auto sq = gen_cube(2, 1, 2, 2);
    auto m0 = monomial_set(sq, 1, 0);
    ASSERT_EQ(m0.size(), 1u);
    EXPECT_EQ(m0[0].alpha, (std::vector<int>{0, 0}));

    auto c3 = gen_cube(3, 1, 2, 2);
    EXPECT_EQ(monomial_set(c3, 1, 1).size(), 5u);
    EXPECT_EQ(monomial_set(cls(3, {{1, 1}}), 1, 1, DegreeBound::full).size(), 5u);
    EXPECT_EQ(monomial_set(cls(3, {{1, 1}}), 1, 1).size(), 1u); // reduced: one label per coordinate

    EXPECT_THROW(monomial_set(sq, 1, 3), InvalidInput);
    EXPECT_THROW(monomial_set(c3, 1, 2, DegreeBound::full, 4), BudgetExceeded);
}

TEST(Monomials, CountMatchesFormulaAndSupportBound) {
    // full bound, [k]^n: sum_j C(n,j) (k-ell)^j ell^(n-j) over j <= s
    for (int k = 2; k <= 4; ++k)
        for (int n = 1; n <= 3; ++n)
            for (int ell = 1; ell < k; ++ell)
                for (int s = 0; s <= n; ++s) {
                    auto w = gen_cube(k, 1, n, n);
                    auto m = monomial_set(w, ell, s, DegreeBound::full);
                    std::uint64_t want = 0;
                    for (int j = 0; j <= s; ++j)
                        want += binomial(n, j) * saturating_pow(k - ell, j) * saturating_pow(ell, n - j);
                    EXPECT_EQ(m.size(), want);
                    for (const auto& mono : m)
                        EXPECT_LE(mono.support_ge_ell, s);
                }
}

TEST(EvalMatrix, Examples) {
    auto w = cls(2, {{1}, {2}});
    auto m = eval_matrix(w, monomial_set(w, 1, 1));
    EXPECT_EQ(m, ints({{1, 1}, {1, 2}}));

    auto single = cls(3, {{2, 3}});
    auto e = eval_matrix(single, {{{1, 2}, 2}});
    EXPECT_EQ(e[0][0], 18);

    auto sq = gen_cube(2, 1, 2, 2);
    auto ones = eval_matrix(sq, {{{0, 0}, 0}});
    for (const auto& x : ones[0])
        EXPECT_EQ(x, 1);
    EXPECT_THROW(eval_matrix(sq, {{{0}, 0}}), InvalidInput);
    EXPECT_THROW(eval_matrix(sq, monomial_set(sq, 1, 2), 3), BudgetExceeded);
}

TEST(EvalMatrix, FullCubeHasFullRank) {
    for (int k = 2; k <= 3; ++k)
        for (int n = 1; n <= 3; ++n) {
            auto w = gen_cube(k, 1, n, n);
            auto m = eval_matrix(w, monomial_set(w, 1, n));
            EXPECT_EQ(oracle_rank(m), w.size());
            EXPECT_EQ(rank_exact(m).rank, w.size());
        }
}

TEST(Spanning, Examples) {
    auto sq = gen_cube(2, 1, 2, 2);
    auto r = check_spanning(sq, 1, 0);
    EXPECT_FALSE(r.spans);
    EXPECT_EQ(r.rank, 1u);
    EXPECT_EQ(r.size, 4u);
    EXPECT_TRUE(check_spanning(sq, 1, 2).spans);
}

TEST(Spanning, HoldsAtDsDimensionForBothDegreeBounds) {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 150; ++trial) {
        int k = 2 + static_cast<int>(rng() % 3);
        int n = 1 + static_cast<int>(rng() % 3);
        auto w = gen_random(k, n, 1 + rng() % std::min<std::uint64_t>(saturating_pow(k, n), 16), rng());
        for (int ell = 1; ell < k; ++ell) {
            int d = ds_dimension(w, ell).value;
            for (auto bound : {DegreeBound::reduced, DegreeBound::full}) {
                AlgebraOptions o;
                o.bound = bound;
                o.prime_seed = rng();
                auto s = check_spanning(w, ell, d, o);
                EXPECT_TRUE(s.spans) << w.size() << " " << ell << " " << d;
                EXPECT_TRUE(check_spanning(w, ell, n, o).spans);
                auto m = eval_matrix(w, monomial_set(w, ell, d, bound));
                EXPECT_EQ(s.rank, oracle_rank(m));
            }
        }
    }
}

TEST(DirectionSubspace, Examples) {
    auto line = cls(3, {{1}, {2}, {3}});
    EXPECT_EQ(direction_subspace_dim(line, 0, 1).formula, 1);
    EXPECT_EQ(direction_subspace_dim(line, 0, 1).rank, 1u);
    EXPECT_EQ(direction_subspace_dim(line, 0, 2).rank, 2u);
    auto sq = gen_cube(2, 1, 2, 2);
    EXPECT_EQ(direction_subspace_dim(sq, 0, 1).rank, 2u);
    auto toy = cls(6, {{2, 1}, {3, 1}, {4, 2}, {5, 2}, {6, 2}});
    EXPECT_EQ(direction_subspace_dim(toy, 0, 1).rank, 2u);
    EXPECT_EQ(direction_subspace_dim(toy, 0, 2).rank, 4u);
    EXPECT_THROW(direction_subspace_dim(toy, 2, 1), InvalidInput);
}

TEST(DirectionSubspace, FormulaAndMembership) {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 80; ++trial) {
        int k = 2 + static_cast<int>(rng() % 3);
        int n = 1 + static_cast<int>(rng() % 3);
        auto w = gen_random(k, n, 1 + rng() % std::min<std::uint64_t>(saturating_pow(k, n), 20), rng());
        for (int ell = 1; ell < k; ++ell) {
            auto mons = monomial_set(w, ell, n, DegreeBound::full);
            auto m = eval_matrix(w, mons);
            OneInclusionGraph g(w);
            for (int i = 0; i < n; ++i) {
                auto d = direction_subspace_dim(w, i, ell, rng());
                EXPECT_TRUE(d.agrees());
                bool big_edge = false;
                for (const auto& e : g.edges_in(i))
                    big_edge = big_edge || static_cast<int>(e.members.size()) > ell;
                for (std::size_t r = 0; r < mons.size(); ++r) {
                    if (mons[r].alpha[i] < ell) {
                        EXPECT_TRUE(in_direction_subspace(w, i, ell, m[r]));
                    } else if (mons[r].alpha[i] == ell && big_edge) {
                        EXPECT_FALSE(in_direction_subspace(w, i, ell, m[r]));
                    }
                }
            }
        }
    }
}

TEST(Counting, BasisBoundsEdgeExcess) {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 100; ++trial) {
        int k = 2 + static_cast<int>(rng() % 3);
        int n = 1 + static_cast<int>(rng() % 3);
        auto w = gen_random(k, n, 1 + rng() % std::min<std::uint64_t>(saturating_pow(k, n), 16), rng());
        for (int ell = 1; ell < k; ++ell) {
            int d = ds_dimension(w, ell).value;
            auto c = counting_inequality(w, ell, d);
            EXPECT_TRUE(c.holds());
            EXPECT_EQ(c.basis_size, w.size());
            auto mons = monomial_set(w, ell, d);
            auto basis = extract_basis(eval_matrix(w, mons));
            std::vector<std::vector<mpq_class>> q;
            auto m = eval_matrix(w, mons);
            for (auto b : basis) {
                std::vector<mpq_class> row;
                for (const auto& x : m[b])
                    row.emplace_back(x);
                q.push_back(row);
            }
            EXPECT_EQ(oracle::rational_rank(q), basis.size());
        }
    }
}

TEST(Audit, Examples) {
    auto r = audit_theorem(gen_cube(4, 1, 2, 3), 1, 3);
    ASSERT_TRUE(r.mu);
    EXPECT_EQ(*r.mu, Ratio(3, 2));
    EXPECT_EQ(r.mu->ceil(), 2);
    EXPECT_EQ(r.d_ds, 2);
    EXPECT_EQ(r.t_star, 2);
    EXPECT_EQ(r.verdict(), "PASS");

    auto single = audit_theorem(cls(3, {{1, 2}}), 1, 2);
    EXPECT_EQ(*single.mu, Ratio(0));
    EXPECT_EQ(single.d_ds, 0);
    EXPECT_EQ(single.verdict(), "PASS");

    auto j = to_json(r);
    EXPECT_EQ(j["mu"]["num"], 3);
    EXPECT_EQ(j["mu"]["den"], 2);
    EXPECT_EQ(j["verdict"], "PASS");
    for (auto& [name, ok] : j["checks"].items())
        EXPECT_TRUE(ok.get<bool>()) << name;
}

TEST(Audit, PassesOnRandomClasses) {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 60; ++trial) {
        int k = 2 + static_cast<int>(rng() % 3);
        int n = 1 + static_cast<int>(rng() % 4);
        auto h = gen_random(k, n, 1 + rng() % std::min<std::uint64_t>(saturating_pow(k, n), 18), rng());
        for (int ell = 1; ell < k; ++ell) {
            auto r = audit_theorem(h, ell, n);
            EXPECT_EQ(r.verdict(), "PASS") << to_json(r).dump();
        }
    }
}

TEST(Audit, BudgetMakesReportPartial) {
    AuditOptions o;
    o.search.exact_cap = 2;
    auto r = audit_theorem(gen_cube(3, 1, 2, 2), 1, 2, o);
    EXPECT_FALSE(r.authoritative);
    EXPECT_FALSE(r.mu);
    EXPECT_EQ(r.verdict(), "PARTIAL");

    AuditOptions small;
    small.algebra.matrix_budget = 2;
    auto r2 = audit_theorem(gen_cube(3, 1, 2, 2), 1, 2, small);
    EXPECT_EQ(r2.verdict(), "PARTIAL");
    EXPECT_FALSE(r2.note.empty());
}
