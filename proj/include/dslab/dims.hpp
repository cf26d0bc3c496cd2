#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "combinatorics.hpp"
#include "error.hpp"
#include "hclass.hpp"
#include "oig.hpp"

namespace dslab {

enum class ShatterKind { ds, natarajan };

inline std::string to_string(ShatterKind k) { return k == ShatterKind::ds ? "ds" : "natarajan"; }

/// A shattered coordinate set together with the subfamily proving it.
struct ShatterWitness {
    CoordSeq coords;
    HypothesisClass subfamily; ///< a subfamily of H|_coords
    ShatterKind kind;
    int ell;
};

struct DimensionOptions {
    std::uint64_t subset_budget = 1ull << 22; ///< coordinate subsets examined before giving up
};

struct DimensionResult {
    int value = 0;
    bool exact = true; ///< false: budget ran out, value is only a lower bound
    std::optional<ShatterWitness> witness;
};

/// Member indices of the maximal subfamily in which every member has at
/// least ell i-neighbours in every direction (empty if none). Valid
/// subfamilies are closed under union, so iterated removal of violating
/// vertices reaches the same fixed point in any order; `peel_seed` shuffles
/// the order for testing that.
inline std::vector<std::size_t> ds_core_members(const HypothesisClass& w, int ell,
                                                std::optional<std::uint64_t> peel_seed = std::nullopt) {
    if (ell < 1)
        throw InvalidInput("list size ell must be >= 1");
    OneInclusionGraph g(w);
    const std::size_t nv = w.size();
    const int n = w.n();
    std::vector<std::int64_t> alive_in(g.edges().size());
    for (std::size_t id = 0; id < g.edges().size(); ++id)
        alive_in[id] = static_cast<std::int64_t>(g.edges()[id].members.size());
    std::vector<bool> alive(nv, true);

    std::vector<std::size_t> work(nv);
    for (std::size_t v = 0; v < nv; ++v)
        work[v] = v;
    std::mt19937_64 rng(peel_seed.value_or(0));
    if (peel_seed)
        for (std::size_t i = nv; i > 1; --i)
            std::swap(work[i - 1], work[uniform_below(rng, i)]);

    auto violates = [&](std::size_t v) {
        for (int dir = 0; dir < n; ++dir)
            if (alive_in[g.edge_of(v, dir)] - 1 < ell)
                return true;
        return false;
    };
    while (!work.empty()) {
        std::size_t v;
        if (peel_seed) {
            auto i = uniform_below(rng, work.size());
            v = work[i];
            work[i] = work.back();
        } else {
            v = work.back();
        }
        work.pop_back();
        if (!alive[v] || !violates(v))
            continue;
        alive[v] = false;
        for (int dir = 0; dir < n; ++dir) {
            auto id = g.edge_of(v, dir);
            --alive_in[id];
            for (auto u : g.edges()[id].members)
                if (alive[u])
                    work.push_back(u);
        }
    }
    std::vector<std::size_t> members;
    for (std::size_t v = 0; v < nv; ++v)
        if (alive[v])
            members.push_back(v);
    return members;
}

inline std::optional<HypothesisClass> ds_shatter_core(const HypothesisClass& w, int ell,
                                                      std::optional<std::uint64_t> peel_seed = std::nullopt) {
    auto members = ds_core_members(w, ell, peel_seed);
    if (members.empty())
        return std::nullopt;
    return w.subfamily(members);
}

namespace detail {

// Both shattering notions are hereditary (a shattered set stays shattered
// after dropping a coordinate: neighbours and product lists project down),
// so the dimension is the last level d at which some d-subset is shattered.
template <typename Check>
DimensionResult ascending_dimension(const HypothesisClass& h, const DimensionOptions& opts, Check check) {
    DimensionResult result;
    std::uint64_t examined = 0;
    for (int d = 1; d <= h.n(); ++d) {
        std::optional<ShatterWitness> found;
        bool budget_hit = false;
        for_each_combination(static_cast<std::size_t>(h.n()), static_cast<std::size_t>(d),
                             [&](const std::vector<std::size_t>& idx) {
                                 if (++examined > opts.subset_budget) {
                                     budget_hit = true;
                                     return false;
                                 }
                                 CoordSeq s(std::vector<int>(idx.begin(), idx.end()));
                                 found = check(s);
                                 return !found.has_value();
                             });
        if (budget_hit) {
            result.exact = false;
            return result;
        }
        if (!found)
            return result;
        result.value = d;
        result.witness = std::move(found);
    }
    return result;
}

// Some (ell+1)-lists per coordinate whose full product lies in r.
inline std::optional<std::vector<std::vector<Label>>> product_lists(const HypothesisClass& r, int ell) {
    const int d = r.n();
    const auto width = static_cast<std::size_t>(ell + 1);
    const std::uint64_t per_label = saturating_pow(width, static_cast<std::uint64_t>(d - 1));
    if (saturating_pow(width, static_cast<std::uint64_t>(d)) > r.size())
        return std::nullopt;

    // a label used at coordinate i appears in (ell+1)^(d-1) product rows
    std::vector<std::vector<Label>> candidates(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
        for (Label y : r.labels_at(i)) {
            std::uint64_t cnt = 0;
            for (std::size_t v = 0; v < r.size(); ++v)
                cnt += r.at(v, i) == y;
            if (cnt >= per_label)
                candidates[i].push_back(y);
        }
        if (candidates[i].size() < width)
            return std::nullopt;
    }
    // projections onto coordinate prefixes
    std::vector<std::set<std::vector<Label>>> prefix(static_cast<std::size_t>(d));
    for (std::size_t v = 0; v < r.size(); ++v) {
        auto row = r.row(v);
        for (int j = 0; j < d; ++j)
            prefix[j].insert(std::vector<Label>(row.begin(), row.begin() + j + 1));
    }

    std::vector<std::vector<Label>> lists(static_cast<std::size_t>(d));
    auto product_inside = [&](int upto) {
        std::vector<std::size_t> pos(static_cast<std::size_t>(upto + 1), 0);
        std::vector<Label> row(static_cast<std::size_t>(upto + 1));
        while (true) {
            for (int i = 0; i <= upto; ++i)
                row[i] = lists[i][pos[i]];
            if (!prefix[upto].count(row))
                return false;
            int i = 0;
            while (i <= upto && ++pos[i] == width)
                pos[i++] = 0;
            if (i > upto)
                return true;
        }
    };
    std::function<bool(int)> extend = [&](int j) {
        if (j == d)
            return true;
        bool ok = false;
        for_each_combination(candidates[j].size(), width, [&](const std::vector<std::size_t>& idx) {
            lists[j].clear();
            for (auto i : idx)
                lists[j].push_back(candidates[j][i]);
            ok = product_inside(j) && extend(j + 1);
            return !ok;
        });
        return ok;
    };
    if (!extend(0))
        return std::nullopt;
    return lists;
}

inline HypothesisClass product_class(int k, const std::vector<std::vector<Label>>& lists) {
    std::vector<std::vector<Label>> rows{{}};
    for (const auto& l : lists) {
        std::vector<std::vector<Label>> next;
        for (const auto& r : rows)
            for (Label y : l) {
                auto x = r;
                x.push_back(y);
                next.push_back(std::move(x));
            }
        rows = std::move(next);
    }
    return HypothesisClass(k, static_cast<int>(lists.size()), std::move(rows));
}

} // namespace detail

/// ell-DS dimension with a witness at the maximum.
inline DimensionResult ds_dimension(const HypothesisClass& h, int ell, const DimensionOptions& opts = {}) {
    if (ell < 1)
        throw InvalidInput("list size ell must be >= 1");
    if (ell >= h.k())
        return {}; // no vertex can have ell distinct i-neighbours
    return detail::ascending_dimension(h, opts, [&](const CoordSeq& s) -> std::optional<ShatterWitness> {
        auto core = ds_shatter_core(restrict(h, s, false), ell);
        if (!core)
            return std::nullopt;
        return ShatterWitness{s, std::move(*core), ShatterKind::ds, ell};
    });
}

/// ell-Natarajan dimension: largest coordinate set carrying a full product
/// of (ell+1)-label lists.
inline DimensionResult natarajan_dimension(const HypothesisClass& h, int ell, const DimensionOptions& opts = {}) {
    if (ell < 1)
        throw InvalidInput("list size ell must be >= 1");
    if (ell + 1 > h.k())
        return {};
    return detail::ascending_dimension(h, opts, [&](const CoordSeq& s) -> std::optional<ShatterWitness> {
        auto lists = detail::product_lists(restrict(h, s, false), ell);
        if (!lists)
            return std::nullopt;
        return ShatterWitness{s, detail::product_class(h.k(), *lists), ShatterKind::natarajan, ell};
    });
}

/// VC dimension of a binary class (k = 2).
inline int vc_dimension(const HypothesisClass& h, const DimensionOptions& opts = {}) {
    if (h.k() != 2)
        throw InvalidInput("VC dimension is defined here for k = 2 only");
    auto r = detail::ascending_dimension(h, opts, [&](const CoordSeq& s) -> std::optional<ShatterWitness> {
        auto w = restrict(h, s, false);
        if (w.size() != (std::size_t{1} << s.size()))
            return std::nullopt;
        return ShatterWitness{s, std::move(w), ShatterKind::natarajan, 1};
    });
    if (!r.exact)
        throw BudgetExceeded("VC dimension search exceeded the subset budget");
    return r.value;
}

/// Re-checks a witness against H from the definitions.
inline bool validate_witness(const HypothesisClass& h, const ShatterWitness& w) {
    try {
        w.coords.validate(h.n(), false);
    } catch (const InvalidInput&) {
        return false;
    }
    const int d = static_cast<int>(w.coords.size());
    if (w.subfamily.n() != d || w.ell < 1)
        return false;
    if (!restrict(h, w.coords, false).contains(w.subfamily))
        return false;
    if (w.kind == ShatterKind::ds) {
        for (const auto& e : build_oig(w.subfamily).edges())
            if (static_cast<int>(e.members.size()) - 1 < w.ell)
                return false;
        return true;
    }
    for (int i = 0; i < d; ++i)
        if (static_cast<int>(w.subfamily.labels_at(i).size()) != w.ell + 1)
            return false;
    return w.subfamily.size() == saturating_pow(static_cast<std::uint64_t>(w.ell + 1), static_cast<std::uint64_t>(d));
}

inline nlohmann::json to_json(const ShatterWitness& w) {
    std::vector<int> coords;
    for (int c : w.coords.coords)
        coords.push_back(c + 1);
    return {{"kind", to_string(w.kind)}, {"ell", w.ell}, {"coords", coords}, {"subfamily", to_json(w.subfamily)}};
}

inline ShatterWitness witness_from_json(const nlohmann::json& j) {
    try {
        auto kind = j.at("kind").get<std::string>();
        if (kind != "ds" && kind != "natarajan")
            throw InvalidInput("unknown witness kind '" + kind + "'");
        CoordSeq coords;
        for (int c : j.at("coords").get<std::vector<int>>())
            coords.coords.push_back(c - 1);
        return {coords, class_from_json(j.at("subfamily")),
                kind == "ds" ? ShatterKind::ds : ShatterKind::natarajan, j.at("ell").get<int>()};
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("malformed witness JSON: ") + e.what());
    }
}

} // namespace dslab
