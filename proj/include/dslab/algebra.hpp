#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <gmpxx.h>
#include <json.hpp>

#include "dims.hpp"
#include "error.hpp"
#include "exact_rank.hpp"
#include "hclass.hpp"
#include "oig.hpp"
#include "rational.hpp"

namespace dslab {

/// Per-coordinate degree cap: k_i - 1 with k_i the labels realized at
/// coordinate i (reduced), or k - 1 everywhere (full).
enum class DegreeBound { reduced, full };

struct Monomial {
    std::vector<int> alpha;
    int support_ge_ell = 0; ///< coordinates with alpha_i >= ell

    friend bool operator==(const Monomial&, const Monomial&) = default;
};

struct AlgebraOptions {
    DegreeBound bound = DegreeBound::reduced;
    std::uint64_t matrix_budget = 4'000'000; ///< max entries of an evaluation matrix
    std::uint64_t prime_seed = 0;
};

inline std::vector<int> degree_caps(const HypothesisClass& w, DegreeBound bound) {
    std::vector<int> caps(static_cast<std::size_t>(w.n()), w.k() - 1);
    if (bound == DegreeBound::reduced)
        for (int i = 0; i < w.n(); ++i)
            caps[i] = static_cast<int>(w.labels_at(i).size()) - 1;
    return caps;
}

/// All exponent vectors within the degree caps with at most s coordinates
/// of degree >= ell, in lexicographic order.
inline std::vector<Monomial> monomial_set(const HypothesisClass& w, int ell, int s,
                                          DegreeBound bound = DegreeBound::reduced,
                                          std::uint64_t budget = 1'000'000) {
    if (ell < 1)
        throw InvalidInput("list size ell must be >= 1");
    if (s < 0 || s > w.n())
        throw InvalidInput("support bound s must lie in [0, n]");
    const auto caps = degree_caps(w, bound);
    const int n = w.n();
    std::vector<Monomial> out;
    std::vector<int> alpha(static_cast<std::size_t>(n), 0);
    while (true) {
        int active = 0;
        for (int a : alpha)
            active += a >= ell;
        if (active <= s) {
            if (out.size() >= budget)
                throw BudgetExceeded("monomial set exceeds budget of " + std::to_string(budget) +
                                     "; raise --budget-matrix or use a smaller class");
            out.push_back({alpha, active});
        }
        int i = n - 1;
        while (i >= 0 && alpha[i] == caps[i])
            alpha[i--] = 0;
        if (i < 0)
            break;
        ++alpha[i];
    }
    return out;
}

/// Rows: monomials; columns: members of W; entries prod_i w_i^alpha_i.
inline IntMatrix eval_matrix(const HypothesisClass& w, const std::vector<Monomial>& monomials,
                             std::uint64_t budget = 4'000'000) {
    if (static_cast<std::uint64_t>(monomials.size()) * w.size() > budget)
        throw BudgetExceeded("evaluation matrix " + std::to_string(monomials.size()) + "x" +
                             std::to_string(w.size()) + " exceeds the matrix budget");
    IntMatrix m(monomials.size(), std::vector<mpz_class>(w.size()));
    for (std::size_t r = 0; r < monomials.size(); ++r) {
        const auto& alpha = monomials[r].alpha;
        if (static_cast<int>(alpha.size()) != w.n())
            throw InvalidInput("monomial length does not match the class");
        for (std::size_t c = 0; c < w.size(); ++c) {
            mpz_class v = 1, p;
            for (int i = 0; i < w.n(); ++i) {
                mpz_ui_pow_ui(p.get_mpz_t(), static_cast<unsigned long>(w.at(c, i)),
                              static_cast<unsigned long>(alpha[i]));
                v *= p;
            }
            m[r][c] = v;
        }
    }
    return m;
}

struct SpanResult {
    bool spans = false;
    std::size_t rank = 0;
    std::size_t size = 0;      ///< |W|
    std::size_t monomials = 0;
    int s = 0;
    std::uint64_t prime = 0;
    bool bareiss = false;
};

inline SpanResult check_spanning(const HypothesisClass& w, int ell, int s, const AlgebraOptions& opts = {}) {
    auto mons = monomial_set(w, ell, s, opts.bound, opts.matrix_budget);
    auto r = rank_exact(eval_matrix(w, mons, opts.matrix_budget), opts.prime_seed);
    return {r.rank == w.size(), r.rank, w.size(), mons.size(), s, r.prime, r.bareiss};
}

namespace detail {
inline mpz_class ipow(Label z, int e) {
    mpz_class v;
    mpz_ui_pow_ui(v.get_mpz_t(), static_cast<unsigned long>(z), static_cast<unsigned long>(e));
    return v;
}
} // namespace detail

struct DirectionSubspace {
    int dir = 0;
    std::int64_t formula = 0; ///< sum over direction edges of min(ell, |e|)
    std::size_t rank = 0;     ///< rank of the stacked per-edge Vandermonde vectors

    bool agrees() const { return static_cast<std::int64_t>(rank) == formula; }
};

/// dim U_i two ways: the closed form and the rank of the spanning vectors
/// (edge a, power p < ell) -> z^p on members of a, 0 elsewhere.
inline DirectionSubspace direction_subspace_dim(const HypothesisClass& w, int dir, int ell,
                                                std::uint64_t prime_seed = 0) {
    if (ell < 1)
        throw InvalidInput("list size ell must be >= 1");
    if (dir < 0 || dir >= w.n())
        throw InvalidInput("direction out of range");
    OneInclusionGraph g(w);
    DirectionSubspace d{dir, 0, 0};
    IntMatrix m;
    for (const auto& e : g.edges_in(dir)) {
        d.formula += std::min<std::int64_t>(ell, static_cast<std::int64_t>(e.members.size()));
        for (int p = 0; p < ell; ++p) {
            std::vector<mpz_class> row(w.size(), 0);
            for (auto v : e.members)
                row[v] = detail::ipow(w.at(v, dir), p);
            m.push_back(std::move(row));
        }
    }
    d.rank = rank_exact(m, prime_seed).rank;
    return d;
}

/// Whether f restricted to every direction-dir edge is a polynomial of
/// degree < ell in the dir-th label (rank of [V | f] equals rank of V).
inline bool in_direction_subspace(const HypothesisClass& w, int dir, int ell, const std::vector<mpz_class>& f) {
    OneInclusionGraph g(w);
    for (const auto& e : g.edges_in(dir)) {
        IntMatrix v, vf;
        for (auto u : e.members) {
            std::vector<mpz_class> row;
            for (int p = 0; p < ell; ++p)
                row.push_back(detail::ipow(w.at(u, dir), p));
            v.push_back(row);
            row.push_back(f[u]);
            vf.push_back(std::move(row));
        }
        if (bareiss_rank(v) != bareiss_rank(vf))
            return false;
    }
    return true;
}

/// Indices of a row basis chosen greedily in row order.
inline std::vector<std::size_t> extract_basis(const IntMatrix& m, std::uint64_t prime_seed = 0) {
    const auto target = rank_exact(m, prime_seed).rank;
    const auto p = random_prime62(prime_seed);
    const std::size_t cols = m.empty() ? 0 : m[0].size();

    // rows independent mod p are independent over Q
    std::vector<std::size_t> basis;
    std::vector<std::vector<std::uint64_t>> echelon;
    std::vector<std::size_t> lead;
    for (std::size_t r = 0; r < m.size() && basis.size() < target; ++r) {
        std::vector<std::uint64_t> v(cols);
        for (std::size_t j = 0; j < cols; ++j) {
            mpz_class t;
            mpz_fdiv_r_ui(t.get_mpz_t(), m[r][j].get_mpz_t(), p);
            v[j] = t.get_ui();
        }
        for (std::size_t b = 0; b < echelon.size(); ++b) {
            auto c = v[lead[b]];
            if (c == 0)
                continue;
            for (std::size_t j = 0; j < cols; ++j)
                v[j] = (v[j] + p - detail::mulmod(c, echelon[b][j], p)) % p;
        }
        auto it = std::find_if(v.begin(), v.end(), [](std::uint64_t x) { return x != 0; });
        if (it == v.end())
            continue;
        auto lc = static_cast<std::size_t>(it - v.begin());
        auto inv = detail::powmod(v[lc], p - 2, p);
        for (auto& x : v)
            x = detail::mulmod(x, inv, p);
        for (std::size_t b = 0; b < echelon.size(); ++b) {
            auto c = echelon[b][lc];
            if (c == 0)
                continue;
            for (std::size_t j = 0; j < cols; ++j)
                echelon[b][j] = (echelon[b][j] + p - detail::mulmod(c, v[j], p)) % p;
        }
        echelon.push_back(std::move(v));
        lead.push_back(lc);
        basis.push_back(r);
    }
    if (basis.size() == target)
        return basis;

    // unlucky prime: redo greedily over Z
    basis.clear();
    IntMatrix chosen;
    for (std::size_t r = 0; r < m.size() && basis.size() < target; ++r) {
        chosen.push_back(m[r]);
        if (bareiss_rank(chosen) == chosen.size())
            basis.push_back(r);
        else
            chosen.pop_back();
    }
    return basis;
}

struct CountingCheck {
    int s = 0;
    std::size_t basis_size = 0;
    std::vector<std::int64_t> excess;  ///< per direction: sum_a (|e_{i,a}| - ell)_+
    std::vector<std::int64_t> high;    ///< per direction: basis monomials with alpha_i >= ell
    bool spans = false;
    bool per_direction = false;        ///< high_i >= excess_i for all i
    bool total = false;                ///< sum_i high_i <= s |W|
    bool low_in_subspace = false;      ///< every basis monomial with alpha_i < ell lies in U_i

    bool holds() const { return spans && per_direction && total && low_in_subspace; }
};

/// Extracts a basis of W's functions from M^ell_s(W) and checks the counting
/// argument that bounds the ell-density of W by s.
inline CountingCheck counting_inequality(const HypothesisClass& w, int ell, int s, const AlgebraOptions& opts = {}) {
    auto mons = monomial_set(w, ell, s, opts.bound, opts.matrix_budget);
    auto m = eval_matrix(w, mons, opts.matrix_budget);
    auto basis = extract_basis(m, opts.prime_seed);
    CountingCheck c;
    c.s = s;
    c.basis_size = basis.size();
    c.spans = basis.size() == w.size();
    OneInclusionGraph g(w);
    const int n = w.n();
    c.excess.assign(static_cast<std::size_t>(n), 0);
    c.high.assign(static_cast<std::size_t>(n), 0);
    c.low_in_subspace = true;
    for (int i = 0; i < n; ++i) {
        for (const auto& e : g.edges_in(i))
            c.excess[i] += std::max<std::int64_t>(static_cast<std::int64_t>(e.members.size()) - ell, 0);
        for (auto b : basis) {
            if (mons[b].alpha[i] >= ell)
                ++c.high[i];
            else if (c.low_in_subspace)
                c.low_in_subspace = in_direction_subspace(w, i, ell, m[b]);
        }
    }
    c.per_direction = true;
    std::int64_t sum_high = 0;
    for (int i = 0; i < n; ++i) {
        c.per_direction = c.per_direction && c.high[i] >= c.excess[i];
        sum_high += c.high[i];
    }
    c.total = sum_high <= static_cast<std::int64_t>(s) * static_cast<std::int64_t>(w.size());
    return c;
}

// ---------------------------------------------------------------------------
// Audit

struct AuditOptions {
    SearchOptions search;
    DimensionOptions dims;
    AlgebraOptions algebra;
};

struct AuditReport {
    std::string class_id;
    int k = 0, n = 0, ell = 1, n_samples = 0;
    std::size_t size = 0;
    bool authoritative = true;
    std::string note; ///< why the report is partial

    std::optional<Ratio> mu;
    CoordSeq mu_coords;
    std::optional<HypothesisClass> w_star; ///< densest subfamily of H|_{mu_coords}
    std::optional<int> d_ds, d_nat;
    std::optional<int> t_star;
    bool t_star_certified = false;
    std::optional<SpanResult> span_h, span_w_star;
    std::vector<DirectionSubspace> subspaces;
    std::optional<CountingCheck> counting;

    std::vector<std::pair<std::string, bool>> verdicts() const {
        std::vector<std::pair<std::string, bool>> v;
        if (mu && d_ds)
            v.emplace_back("ceil_mu_le_d_ds", mu->ceil() <= *d_ds);
        if (d_nat && d_ds)
            v.emplace_back("d_nat_le_d_ds", *d_nat <= *d_ds);
        if (mu && t_star)
            v.emplace_back("t_star_eq_ceil_mu", t_star_certified && *t_star == mu->ceil());
        if (span_h)
            v.emplace_back("spanning_h", span_h->spans);
        if (span_w_star)
            v.emplace_back("spanning_w_star", span_w_star->spans);
        if (!subspaces.empty()) {
            bool ok = true;
            for (const auto& d : subspaces)
                ok = ok && d.agrees();
            v.emplace_back("direction_subspace_dim", ok);
        }
        if (counting)
            v.emplace_back("counting_inequality", counting->holds());
        return v;
    }

    bool failed() const {
        for (const auto& [name, ok] : verdicts())
            if (!ok)
                return true;
        return false;
    }

    /// PASS, FAIL, or PARTIAL (budget hit before every check ran).
    std::string verdict() const {
        if (failed())
            return "FAIL";
        return authoritative ? "PASS" : "PARTIAL";
    }
};

/// Computes mu, both dimensions, the optimal orientation on the maximizing
/// restriction, and the algebraic certificates; each verdict is derived
/// from the stored raw values.
inline AuditReport audit_theorem(const HypothesisClass& h, int ell, int n_samples, const AuditOptions& opts = {},
                                 std::string class_id = {}) {
    if (ell < 1)
        throw InvalidInput("list size ell must be >= 1");
    AuditReport r;
    r.class_id = std::move(class_id);
    r.k = h.k();
    r.n = h.n();
    r.size = h.size();
    r.ell = ell;
    r.n_samples = n_samples;
    auto partial = [&](const std::string& why) {
        r.authoritative = false;
        if (!r.note.empty())
            r.note += "; ";
        r.note += why;
    };

    try {
        auto m = mu(h, n_samples, ell, opts.search);
        r.mu = m.value;
        r.mu_coords = m.coords;
        r.w_star = m.best.subfamily;
        if (!m.exact)
            partial("mu is a lower bound only");
    } catch (const BudgetExceeded& e) {
        partial(e.what());
    }

    auto ds = ds_dimension(h, ell, opts.dims);
    if (ds.exact)
        r.d_ds = ds.value;
    else
        partial("DS dimension search exceeded the subset budget (>= " + std::to_string(ds.value) + ")");
    auto nat = natarajan_dimension(h, ell, opts.dims);
    if (nat.exact)
        r.d_nat = nat.value;
    else
        partial("Natarajan dimension search exceeded the subset budget (>= " + std::to_string(nat.value) + ")");

    if (r.mu) {
        auto g = build_oig(restrict(h, r.mu_coords, false));
        auto o = min_max_orientation(g, ell);
        r.t_star = o.t_star;
        r.t_star_certified = o.certified;
    }

    if (r.d_ds) {
        try {
            r.span_h = check_spanning(h, ell, *r.d_ds, opts.algebra);
            if (r.w_star) {
                const auto& w = *r.w_star;
                int s = std::min(*r.d_ds, w.n());
                r.span_w_star = check_spanning(w, ell, s, opts.algebra);
                for (int i = 0; i < w.n(); ++i)
                    r.subspaces.push_back(direction_subspace_dim(w, i, ell, opts.algebra.prime_seed));
                r.counting = counting_inequality(w, ell, s, opts.algebra);
            }
        } catch (const BudgetExceeded& e) {
            partial(e.what());
        }
    }
    return r;
}

inline nlohmann::json to_json(const SpanResult& s) {
    return {{"spans", s.spans}, {"rank", s.rank}, {"size", s.size}, {"monomials", s.monomials},
            {"s", s.s},         {"prime", s.prime}, {"bareiss", s.bareiss}};
}

inline nlohmann::json to_json(const AuditReport& r) {
    nlohmann::json j;
    j["class"] = r.class_id;
    j["k"] = r.k;
    j["n"] = r.n;
    j["size"] = r.size;
    j["ell"] = r.ell;
    j["n_samples"] = r.n_samples;
    j["authoritative"] = r.authoritative;
    if (!r.note.empty())
        j["note"] = r.note;
    if (r.mu) {
        std::vector<int> coords;
        for (int c : r.mu_coords.coords)
            coords.push_back(c + 1);
        j["mu"] = {{"num", r.mu->num()}, {"den", r.mu->den()}, {"value", r.mu->str()},
                   {"ceil", r.mu->ceil()}, {"coords", coords}};
        if (r.w_star)
            j["mu"]["subfamily"] = to_json(*r.w_star);
    }
    j["d_ds"] = r.d_ds ? nlohmann::json(*r.d_ds) : nlohmann::json(nullptr);
    j["d_nat"] = r.d_nat ? nlohmann::json(*r.d_nat) : nlohmann::json(nullptr);
    j["t_star"] = r.t_star ? nlohmann::json(*r.t_star) : nlohmann::json(nullptr);
    j["t_star_certified"] = r.t_star_certified;
    if (r.span_h)
        j["spanning_h"] = to_json(*r.span_h);
    if (r.span_w_star)
        j["spanning_w_star"] = to_json(*r.span_w_star);
    if (!r.subspaces.empty()) {
        auto arr = nlohmann::json::array();
        for (const auto& d : r.subspaces)
            arr.push_back({{"dir", d.dir + 1}, {"formula", d.formula}, {"rank", d.rank}});
        j["direction_subspaces"] = arr;
    }
    if (r.counting) {
        const auto& c = *r.counting;
        j["counting"] = {{"s", c.s},          {"basis_size", c.basis_size}, {"excess", c.excess},
                         {"high", c.high},    {"per_direction", c.per_direction},
                         {"total", c.total},  {"low_in_subspace", c.low_in_subspace}};
    }
    nlohmann::json v;
    for (const auto& [name, ok] : r.verdicts())
        v[name] = ok;
    j["checks"] = v;
    j["verdict"] = r.verdict();
    return j;
}

} // namespace dslab
