#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iterator>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "combinatorics.hpp"
#include "dims.hpp"
#include "error.hpp"
#include "hclass.hpp"
#include "learn.hpp"
#include "parallel.hpp"

namespace dslab {

/// A list function on the finite domain, one list per instance.
using ListTable = std::vector<ListPrediction>;

inline ListPrediction list_union(const ListPrediction& a, const ListPrediction& b) {
    ListPrediction out;
    std::set_union(a.labels.begin(), a.labels.end(), b.labels.begin(), b.labels.end(),
                   std::back_inserter(out.labels));
    return out;
}

inline ListPrediction list_intersection(const ListPrediction& a, const ListPrediction& b) {
    ListPrediction out;
    std::set_intersection(a.labels.begin(), a.labels.end(), b.labels.begin(), b.labels.end(),
                          std::back_inserter(out.labels));
    return out;
}

inline std::size_t max_list_size(const ListTable& t) {
    std::size_t m = 0;
    for (const auto& l : t)
        m = std::max(m, l.size());
    return m;
}

// ---------------------------------------------------------------------------
// Step 1: list cover

struct CoverMember {
    ListTable table;                        ///< union of the predictors below
    std::vector<LabeledSample> subsamples;  ///< one realizable subsample per union term
};

struct CoverFailure {
    std::size_t hypothesis;
    std::string reason;
};

struct CoverOptions {
    std::size_t d = 0;                   ///< subsample size; 0: 4 * d_DS (at least 1)
    std::size_t j = 0;                   ///< union terms; 0: ceil(log2 |S1|) (at least 1)
    std::size_t attempts_per_round = 200;
    std::uint64_t attempt_budget = 2'000'000;
    unsigned jobs = 1;
};

struct ListCover {
    std::vector<CoverMember> members;
    /// per hypothesis of H: index of its covering member, absent when S1(h)
    /// is empty or boosting failed
    std::vector<std::optional<std::size_t>> designated;
    std::vector<CoverFailure> failures;
    std::size_t d = 0, j = 0;
    int ell = 1;
    std::uint64_t attempts = 0;

    std::size_t list_bound() const { return j * static_cast<std::size_t>(ell); }
};

inline std::size_t default_union_count(std::size_t n1) {
    std::size_t j = 0;
    while ((std::size_t{1} << j) < n1)
        ++j;
    return std::max<std::size_t>(j, 1);
}

namespace detail {

struct BoostOutcome {
    std::optional<CoverMember> member;
    std::string failure;
    std::uint64_t attempts = 0;
};

// Weighted boosting over the points of S1(h): draw size-d subsamples by
// weight until one misses at most a third of the weight, halve the weight
// of every point it covers, and stop once all points are covered.
inline BoostOutcome boost_cover(const HypothesisClass& h, const LabeledSample& pts, int ell, std::size_t d,
                                std::size_t j, std::size_t attempts_per_round, std::uint64_t budget,
                                std::uint64_t seed) {
    BoostOutcome out;
    std::mt19937_64 rng(seed);
    const std::size_t m = pts.size();
    std::vector<double> w(m, 1.0);
    std::vector<bool> covered(m, false);
    CoverMember member;
    member.table.assign(static_cast<std::size_t>(h.n()), ListPrediction{});
    std::size_t remaining = m;
    for (std::size_t round = 0; round < j && remaining > 0; ++round) {
        bool accepted = false;
        for (std::size_t a = 0; a < attempts_per_round && !accepted; ++a) {
            if (++out.attempts > budget) {
                out.failure = "attempt budget exhausted";
                return out;
            }
            double total = 0;
            for (double x : w)
                total += x;
            LabeledSample t;
            for (std::size_t i = 0; i < d; ++i) {
                double u = uniform_unit(rng) * total;
                std::size_t k = 0;
                while (k + 1 < m && u >= w[k]) {
                    u -= w[k];
                    ++k;
                }
                t.points.push_back(pts.points[k]);
            }
            ListTable f(static_cast<std::size_t>(h.n()));
            for (int x = 0; x < h.n(); ++x)
                f[x] = oig_list_predict(h, t, x, ell);
            double miss = 0;
            for (std::size_t i = 0; i < m; ++i)
                if (!f[pts.points[i].first].contains(pts.points[i].second))
                    miss += w[i];
            if (3 * miss > total)
                continue;
            accepted = true;
            for (int x = 0; x < h.n(); ++x)
                member.table[x] = list_union(member.table[x], f[x]);
            member.subsamples.push_back(std::move(t));
            for (std::size_t i = 0; i < m; ++i)
                if (f[pts.points[i].first].contains(pts.points[i].second)) {
                    w[i] /= 2;
                    if (!covered[i]) {
                        covered[i] = true;
                        --remaining;
                    }
                }
        }
        if (!accepted) {
            out.failure = "no subsample of size " + std::to_string(d) +
                          " reached weighted miss rate 1/3; increase d";
            return out;
        }
    }
    if (remaining > 0) {
        out.failure = std::to_string(remaining) + " points still uncovered after " + std::to_string(j) + " rounds";
        return out;
    }
    out.member = std::move(member);
    return out;
}

} // namespace detail

/// For each h in H, a union of at most j one-inclusion list predictors, each
/// trained on d points of S1(h), that covers every point of S1(h).
inline ListCover build_list_cover(const HypothesisClass& h, const LabeledSample& s1, int ell,
                                  const CoverOptions& opts, std::uint64_t seed) {
    if (ell < 1)
        throw InvalidInput("list size ell must be >= 1");
    s1.validate(h);
    ListCover cover;
    cover.ell = ell;
    cover.d = opts.d ? opts.d : std::max<std::size_t>(4 * static_cast<std::size_t>(ds_dimension(h, ell).value), 1);
    cover.j = opts.j ? opts.j : default_union_count(s1.size());
    cover.designated.assign(h.size(), std::nullopt);
    if (s1.empty())
        return cover;

    std::vector<detail::BoostOutcome> outcome(h.size());
    std::vector<char> has_points(h.size(), 0);
    parallel_for(h.size(), opts.jobs, [&](std::size_t i) {
        LabeledSample pts;
        for (auto p : s1.points)
            if (h.at(i, p.first) == p.second)
                pts.points.push_back(p);
        if (pts.empty())
            return;
        has_points[i] = 1;
        outcome[i] = detail::boost_cover(h, pts, ell, cover.d, cover.j, opts.attempts_per_round,
                                         opts.attempt_budget, stream_seed(seed, i));
    });
    for (std::size_t i = 0; i < h.size(); ++i) {
        cover.attempts += outcome[i].attempts;
        if (!has_points[i])
            continue;
        if (!outcome[i].member) {
            cover.failures.push_back({i, outcome[i].failure});
            continue;
        }
        auto& m = *outcome[i].member;
        auto same = std::find_if(cover.members.begin(), cover.members.end(),
                                 [&](const CoverMember& c) { return c.table == m.table; });
        if (same != cover.members.end()) {
            cover.designated[i] = static_cast<std::size_t>(same - cover.members.begin());
        } else {
            cover.designated[i] = cover.members.size();
            cover.members.push_back(std::move(m));
        }
    }
    if (cover.attempts > opts.attempt_budget)
        throw BudgetExceeded("list cover exceeded its attempt budget of " + std::to_string(opts.attempt_budget));
    return cover;
}

// ---------------------------------------------------------------------------
// Step 2: multiplicative weights menu

struct Menu {
    ListTable nu; ///< union of the chosen members over rounds 1..T-1
    std::vector<std::size_t> chosen;               ///< selection trace, round t -> member
    std::vector<std::vector<std::uint8_t>> rewards; ///< round t -> reward of each member
    std::vector<std::vector<double>> probs;         ///< round t -> p_t
    std::vector<std::uint32_t> reward_totals;       ///< after all rounds

    /// w_t(mu) = exp(R_t(mu) / 2), R_t the rewards collected before round t.
    double weight(std::size_t t, std::size_t member) const {
        std::uint32_t r = 0;
        for (std::size_t s = 0; s < t; ++s)
            r += rewards[s][member];
        return std::exp(r / 2.0);
    }
};

inline Menu mw_menu(const std::vector<ListTable>& family, const LabeledSample& s2, std::uint64_t seed,
                    int instances) {
    if (family.empty())
        throw InvalidInput("multiplicative weights needs a non-empty cover");
    if (s2.empty())
        throw InvalidInput("multiplicative weights needs at least one round");
    std::mt19937_64 rng(seed);
    const std::size_t f = family.size();
    Menu menu;
    menu.nu.assign(static_cast<std::size_t>(instances), ListPrediction{});
    menu.reward_totals.assign(f, 0);
    ListTable seen(static_cast<std::size_t>(instances)); // union of mu_r for r < t
    const std::size_t rounds = s2.size();
    for (std::size_t t = 0; t < rounds; ++t) {
        // p_t proportional to exp(R/2); shift by the max exponent for range
        std::uint32_t top = *std::max_element(menu.reward_totals.begin(), menu.reward_totals.end());
        std::vector<double> p(f);
        double z = 0;
        for (std::size_t i = 0; i < f; ++i)
            z += p[i] = std::exp((static_cast<double>(menu.reward_totals[i]) - top) / 2.0);
        for (auto& x : p)
            x /= z;
        double u = uniform_unit(rng);
        std::size_t pick = 0;
        while (pick + 1 < f && u >= p[pick]) {
            u -= p[pick];
            ++pick;
        }
        auto [x, y] = s2.points[t];
        std::vector<std::uint8_t> r(f);
        for (std::size_t i = 0; i < f; ++i) {
            r[i] = family[i][x].contains(y) && !seen[x].contains(y);
            menu.reward_totals[i] += r[i];
        }
        for (std::size_t xi = 0; xi < seen.size(); ++xi)
            seen[xi] = list_union(seen[xi], family[pick][xi]);
        if (t + 1 < rounds)
            for (std::size_t xi = 0; xi < seen.size(); ++xi)
                menu.nu[xi] = list_union(menu.nu[xi], family[pick][xi]);
        menu.chosen.push_back(pick);
        menu.rewards.push_back(std::move(r));
        menu.probs.push_back(std::move(p));
    }
    return menu;
}

inline Menu mw_menu(const ListCover& cover, const LabeledSample& s2, std::uint64_t seed, int instances) {
    std::vector<ListTable> family;
    for (const auto& m : cover.members)
        family.push_back(m.table);
    return mw_menu(family, s2, seed, instances);
}

// ---------------------------------------------------------------------------
// Step 3: inside-menu ERM

struct InsideMenuResult {
    std::size_t erm = 0;              ///< h_S
    ListTable mu_hat;                 ///< list predictor, inside nu
    std::size_t loss_mu_hat = 0;      ///< sum over S of 1[y in nu(x), y not in mu_hat(x)]
    std::size_t loss_erm = 0;         ///< min over h of 1[y in nu(x), y != h(x)] summed
    std::size_t s_plus = 0;
    std::size_t h_prime = 0;          ///< hypotheses whose labels on S+ instances lie in nu
    bool empty_s_plus = false;
    bool subset_of_nu = false;
    bool optimal = false;
};

/// h_S by exhaustive ERM on the inside-menu loss, then the one-inclusion
/// list predictor trained on S+ over the nu-consistent subclass, clipped to nu.
inline InsideMenuResult inside_menu_erm(const HypothesisClass& h, const ListTable& nu, const LabeledSample& s3,
                                        int ell) {
    if (s3.empty())
        throw InvalidInput("inside-menu ERM needs a non-empty sample");
    if (static_cast<int>(nu.size()) != h.n())
        throw InvalidInput("menu does not match the instance domain");
    s3.validate(h);
    InsideMenuResult r;
    r.loss_erm = std::numeric_limits<std::size_t>::max();
    for (std::size_t i = 0; i < h.size(); ++i) {
        std::size_t loss = 0;
        for (auto [x, y] : s3.points)
            loss += nu[x].contains(y) && h.at(i, x) != y;
        if (loss < r.loss_erm) {
            r.loss_erm = loss;
            r.erm = i;
        }
    }
    LabeledSample plus;
    for (auto [x, y] : s3.points)
        if (nu[x].contains(y) && h.at(r.erm, x) == y)
            plus.points.push_back({x, y});
    r.s_plus = plus.size();
    r.mu_hat.assign(static_cast<std::size_t>(h.n()), ListPrediction{});
    if (plus.empty()) {
        r.empty_s_plus = true;
    } else {
        std::vector<std::size_t> keep;
        for (std::size_t i = 0; i < h.size(); ++i) {
            bool ok = true;
            for (auto [x, y] : plus.points)
                ok = ok && nu[x].contains(h.at(i, x));
            if (ok)
                keep.push_back(i);
        }
        r.h_prime = keep.size();
        auto sub = h.subfamily(keep);
        for (int x = 0; x < h.n(); ++x)
            r.mu_hat[x] = list_intersection(nu[x], oig_list_predict(sub, plus, x, ell));
    }
    for (auto [x, y] : s3.points)
        r.loss_mu_hat += nu[x].contains(y) && !r.mu_hat[x].contains(y);
    r.subset_of_nu = true;
    for (int x = 0; x < h.n(); ++x)
        r.subset_of_nu = r.subset_of_nu && list_intersection(r.mu_hat[x], nu[x]) == r.mu_hat[x];
    r.optimal = r.loss_mu_hat <= r.loss_erm;
    return r;
}

// ---------------------------------------------------------------------------
// Pipeline

struct AgnosticReport {
    std::string class_id;
    int ell = 1;
    std::size_t n1 = 0, rounds = 0, n3 = 0;
    std::uint64_t seed = 0;
    std::uint64_t stage_seeds[4] = {0, 0, 0, 0}; ///< S1, S2, S3 draws and the menu sampler
    std::size_t cover_d = 0, cover_j = 0, cover_size = 0;
    std::vector<CoverFailure> cover_failures;
    bool cover_correct = false;
    std::map<std::size_t, std::size_t> nu_histogram; ///< |nu(x)| -> number of instances
    std::size_t nu_max = 0;
    InsideMenuResult step3;
    bool mw_valid = false; ///< rewards in {0,1}, weights exp(R/2) non-decreasing, p_t a distribution

    double err_mu_hat = 0;
    double err_best = 0;  ///< min over h of err_D(h)
    std::size_t best = 0; ///< the minimizing h*
    double excess = 0;
    // excess = menu_miss + inside_gap, with
    // menu_miss = Pr[h*(x)=y, y not in nu(x)] <= cover_term + mw_term
    double cover_term = 0; ///< Pr[h*(x)=y, y not in mu*(x)]
    double mw_term = 0;    ///< Pr[y in mu*(x), y not in nu(x)]
    double menu_miss = 0;
    double inside_gap = 0; ///< L^nu(mu_hat) - L^nu(h*)

    bool invariants_hold() const {
        return cover_correct && mw_valid && step3.subset_of_nu && step3.optimal &&
               nu_max <= (rounds ? rounds - 1 : 0) * cover_j * static_cast<std::size_t>(ell) &&
               std::abs(excess - (menu_miss + inside_gap)) <= 1e-9 && menu_miss <= cover_term + mw_term + 1e-9;
    }
};

/// Every point of S1(h) lies in the designated member of h.
inline bool cover_is_correct(const HypothesisClass& h, const ListCover& cover, const LabeledSample& s1) {
    for (std::size_t i = 0; i < h.size(); ++i)
        for (auto [x, y] : s1.points) {
            if (h.at(i, x) != y)
                continue;
            if (!cover.designated[i] || !cover.members[*cover.designated[i]].table[x].contains(y))
                return false;
        }
    return true;
}

inline bool menu_is_valid(const Menu& menu) {
    for (std::size_t t = 0; t < menu.rewards.size(); ++t) {
        double z = 0;
        for (double p : menu.probs[t]) {
            if (!(p > 0))
                return false;
            z += p;
        }
        if (std::abs(z - 1) > 1e-12)
            return false;
        for (std::size_t i = 0; i < menu.rewards[t].size(); ++i) {
            auto r = menu.rewards[t][i];
            if (r > 1)
                return false;
            double before = menu.weight(t, i), after = menu.weight(t + 1, i);
            if (after < before || std::abs(after - before * std::exp(r / 2.0)) > 1e-12 * after)
                return false;
        }
    }
    return true;
}

inline AgnosticReport agnostic_pipeline(const HypothesisClass& h, const SyntheticDistribution& d, int ell,
                                        std::size_t n1, std::size_t rounds, std::size_t n3, std::uint64_t seed,
                                        const CoverOptions& copts = {}, std::string class_id = {}) {
    if (n1 < 1 || rounds < 1 || n3 < 1)
        throw InvalidInput("agnostic pipeline needs n1, T, n3 >= 1");
    d.validate(h);
    AgnosticReport r;
    r.class_id = std::move(class_id);
    r.ell = ell;
    r.n1 = n1;
    r.rounds = rounds;
    r.n3 = n3;
    r.seed = seed;
    for (int s = 0; s < 4; ++s)
        r.stage_seeds[s] = stream_seed(seed, static_cast<std::uint64_t>(s));

    std::mt19937_64 g1(r.stage_seeds[0]), g2(r.stage_seeds[1]), g3(r.stage_seeds[2]);
    auto s1 = d.sample(g1, n1);
    auto s2 = d.sample(g2, rounds);
    auto s3 = d.sample(g3, n3);

    auto cover = build_list_cover(h, s1, ell, copts, r.stage_seeds[0]);
    r.cover_d = cover.d;
    r.cover_j = cover.j;
    r.cover_size = cover.members.size();
    r.cover_failures = cover.failures;
    r.cover_correct = cover_is_correct(h, cover, s1);

    Menu menu;
    if (cover.members.empty()) {
        menu.nu.assign(static_cast<std::size_t>(h.n()), ListPrediction{});
    } else {
        menu = mw_menu(cover, s2, r.stage_seeds[3], h.n());
    }
    r.mw_valid = menu_is_valid(menu);
    for (const auto& l : menu.nu) {
        ++r.nu_histogram[l.size()];
        r.nu_max = std::max(r.nu_max, l.size());
    }

    r.step3 = inside_menu_erm(h, menu.nu, s3, ell);
    const auto& mu_hat = r.step3.mu_hat;
    r.err_mu_hat = d.error([&](int x) { return mu_hat[x]; });
    r.err_best = 2;
    for (std::size_t i = 0; i < h.size(); ++i) {
        double e = d.error([&](int x) { return ListPrediction{{h.at(i, x)}}; });
        if (e < r.err_best) {
            r.err_best = e;
            r.best = i;
        }
    }
    r.excess = r.err_mu_hat - r.err_best;

    ListTable none(static_cast<std::size_t>(h.n()));
    const ListTable& mu_star = cover.designated[r.best] ? cover.members[*cover.designated[r.best]].table : none;
    double inside_mu = 0, inside_h = 0;
    for (const auto& s : d.support) {
        bool star = h.at(r.best, s.instance) == s.label;
        bool in_nu = menu.nu[s.instance].contains(s.label);
        bool in_mu_star = mu_star[s.instance].contains(s.label);
        if (star && !in_mu_star)
            r.cover_term += s.p;
        if (in_mu_star && !in_nu)
            r.mw_term += s.p;
        if (star && !in_nu)
            r.menu_miss += s.p;
        if (in_nu && !mu_hat[s.instance].contains(s.label))
            inside_mu += s.p;
        if (in_nu && !star)
            inside_h += s.p;
    }
    r.inside_gap = inside_mu - inside_h;
    return r;
}

inline nlohmann::json to_json(const AgnosticReport& r) {
    nlohmann::json hist;
    for (auto [size, count] : r.nu_histogram)
        hist[std::to_string(size)] = count;
    nlohmann::json failures = nlohmann::json::array();
    for (const auto& f : r.cover_failures)
        failures.push_back({{"hypothesis", f.hypothesis}, {"reason", f.reason}});
    return {{"class", r.class_id},
            {"ell", r.ell},
            {"n1", r.n1},
            {"T", r.rounds},
            {"n3", r.n3},
            {"seed", r.seed},
            {"stage_seeds", {{"s1", r.stage_seeds[0]}, {"s2", r.stage_seeds[1]}, {"s3", r.stage_seeds[2]},
                             {"menu", r.stage_seeds[3]}}},
            {"cover", {{"d", r.cover_d}, {"j", r.cover_j}, {"size", r.cover_size}, {"correct", r.cover_correct},
                       {"failures", failures}}},
            {"nu_histogram", hist},
            {"inside_menu",
             {{"erm", r.step3.erm},
              {"s_plus", r.step3.s_plus},
              {"h_prime", r.step3.h_prime},
              {"loss_mu_hat", r.step3.loss_mu_hat},
              {"loss_erm", r.step3.loss_erm},
              {"subset_of_nu", r.step3.subset_of_nu},
              {"optimal", r.step3.optimal}}},
            {"err_mu_hat", r.err_mu_hat},
            {"err_best", r.err_best},
            {"excess", r.excess},
            {"decomposition",
             {{"cover_term", r.cover_term},
              {"mw_term", r.mw_term},
              {"menu_miss", r.menu_miss},
              {"inside_gap", r.inside_gap}}},
            {"verdict", r.invariants_hold() ? "PASS" : "FAIL"}};
}

} // namespace dslab
