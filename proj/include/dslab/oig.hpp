#pragma once

#include <algorithm>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <type_traits>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "combinatorics.hpp"
#include "error.hpp"
#include "flow.hpp"
#include "hclass.hpp"
#include "rational.hpp"

namespace dslab {

/// A hyperedge e_{i,a}: the vertices agreeing with behaviour `key` off
/// direction `dir`.
struct Edge {
    int dir;
    std::vector<Label> key;
    std::vector<std::uint32_t> members; // ascending vertex indices
};

namespace detail {
struct LabelVecHash {
    std::size_t operator()(const std::vector<Label>& v) const noexcept {
        std::uint64_t h = 0xcbf29ce484222325ull;
        for (Label x : v) {
            h ^= static_cast<std::uint64_t>(x);
            h *= 0x100000001b3ull;
        }
        return static_cast<std::size_t>(h);
    }
};
} // namespace detail

/// One-inclusion hypergraph of a finite class. Every vertex lies in exactly
/// one edge per direction. A frozen direction stands for a coordinate that
/// is repeated in the sample sequence: its copies always agree, so every
/// edge in that direction is a singleton.
class OneInclusionGraph {
public:
    explicit OneInclusionGraph(HypothesisClass w, std::vector<bool> frozen = {})
        : base_(std::move(w)), frozen_(std::move(frozen)) {
        const int n = base_.n();
        if (frozen_.empty())
            frozen_.assign(static_cast<std::size_t>(n), false);
        if (static_cast<int>(frozen_.size()) != n)
            throw InvalidInput("frozen-direction mask has wrong length");
        const std::size_t nv = base_.size();
        vertex_edge_.assign(nv * static_cast<std::size_t>(n), 0);
        dir_offset_.push_back(0);
        for (int dir = 0; dir < n; ++dir) {
            std::vector<Edge> group;
            std::unordered_map<std::vector<Label>, std::size_t, detail::LabelVecHash> index;
            for (std::size_t v = 0; v < nv; ++v) {
                std::vector<Label> key;
                key.reserve(static_cast<std::size_t>(n - 1));
                for (int c = 0; c < n; ++c)
                    if (c != dir)
                        key.push_back(base_.at(v, c));
                if (frozen_[dir]) {
                    group.push_back({dir, std::move(key), {static_cast<std::uint32_t>(v)}});
                    continue;
                }
                auto [it, inserted] = index.try_emplace(key, group.size());
                if (inserted)
                    group.push_back({dir, std::move(key), {}});
                group[it->second].members.push_back(static_cast<std::uint32_t>(v));
            }
            std::stable_sort(group.begin(), group.end(),
                             [](const Edge& a, const Edge& b) { return a.key < b.key; });
            for (auto& e : group) {
                for (auto v : e.members)
                    vertex_edge_[v * static_cast<std::size_t>(n) + dir] = edges_.size();
                edges_.push_back(std::move(e));
            }
            dir_offset_.push_back(edges_.size());
        }
    }

    const HypothesisClass& base() const { return base_; }
    int directions() const { return base_.n(); }
    std::size_t vertex_count() const { return base_.size(); }
    bool frozen(int dir) const { return frozen_[dir]; }

    std::span<const Edge> edges() const { return edges_; }
    std::span<const Edge> edges_in(int dir) const {
        return std::span<const Edge>(edges_).subspan(dir_offset_[dir], dir_offset_[dir + 1] - dir_offset_[dir]);
    }
    std::size_t first_edge_in(int dir) const { return dir_offset_[dir]; }

    /// Edge id containing vertex v in direction dir.
    std::size_t edge_of(std::size_t v, int dir) const {
        return vertex_edge_[v * static_cast<std::size_t>(directions()) + dir];
    }

    /// Every vertex is adjacent to exactly n edges.
    int degree(std::size_t) const { return directions(); }

    /// Edge with a given off-direction behaviour (non-frozen directions only).
    std::optional<std::size_t> find_edge(int dir, std::span<const Label> key) const {
        if (frozen_[dir])
            return std::nullopt;
        auto es = edges_in(dir);
        auto it = std::lower_bound(es.begin(), es.end(), key, [](const Edge& e, std::span<const Label> k) {
            return std::lexicographical_compare(e.key.begin(), e.key.end(), k.begin(), k.end());
        });
        if (it != es.end() && std::ranges::equal(it->key, key))
            return dir_offset_[dir] + static_cast<std::size_t>(it - es.begin());
        return std::nullopt;
    }

private:
    HypothesisClass base_;
    std::vector<bool> frozen_;
    std::vector<Edge> edges_;
    std::vector<std::size_t> dir_offset_;
    std::vector<std::size_t> vertex_edge_;
};

inline OneInclusionGraph build_oig(const HypothesisClass& w) { return OneInclusionGraph(w); }

/// Sum over edges of (|e| - ell)_+.
inline std::int64_t excess_sum(const OneInclusionGraph& g, int ell) {
    std::int64_t total = 0;
    for (const auto& e : g.edges())
        total += std::max<std::int64_t>(static_cast<std::int64_t>(e.members.size()) - ell, 0);
    return total;
}

inline Ratio density(const OneInclusionGraph& g, int ell) {
    if (ell < 1)
        throw InvalidInput("list size ell must be >= 1");
    return Ratio(excess_sum(g, ell), static_cast<std::int64_t>(g.vertex_count()));
}

/// ell-density: (1/|V|) * sum_e (|e| - ell)_+.
inline Ratio density(const HypothesisClass& w, int ell) { return density(build_oig(w), ell); }

// ---------------------------------------------------------------------------
// Maximum-density subfamilies

enum class SearchMode { exact, heuristic };

struct SearchOptions {
    std::size_t exact_cap = 22; ///< exact search only when |W| <= cap
    bool allow_heuristic = false; ///< above the cap, fall back to local search instead of failing
};

struct SubfamilyResult {
    Ratio density;
    std::vector<std::size_t> members; ///< ascending indices into W
    HypothesisClass subfamily;
    bool exact = true; ///< false: lower bound from local search only
};

/// Per-edge objectives over a subfamily: contribution of an edge holding c
/// members of the subfamily.
struct EllExcess {
    int ell;
    std::int64_t operator()(std::int64_t c) const { return std::max<std::int64_t>(c - ell, 0); }
};
/// The alternative density: sum of |e| over edges with |e| > 1.
struct NontrivialEdgeMass {
    std::int64_t operator()(std::int64_t c) const { return c > 1 ? c : 0; }
};

namespace detail {

// Candidate A beats incumbent B: higher value, then fewer members, then the
// lexicographically smaller member list.
inline bool better(std::int64_t num_a, std::int64_t den_a, std::uint64_t mask_a, std::int64_t num_b,
                   std::int64_t den_b, std::uint64_t mask_b) {
    __int128 lhs = static_cast<__int128>(num_a) * den_b;
    __int128 rhs = static_cast<__int128>(num_b) * den_a;
    if (lhs != rhs)
        return lhs > rhs;
    if (den_a != den_b)
        return den_a < den_b;
    std::uint64_t diff = mask_a ^ mask_b;
    return diff != 0 && (mask_a & (diff & (~diff + 1))) != 0;
}

template <typename Objective>
std::int64_t objective_of(const OneInclusionGraph& g, const std::vector<bool>& in, Objective f) {
    std::int64_t total = 0;
    for (const auto& e : g.edges()) {
        std::int64_t c = 0;
        for (auto v : e.members)
            c += in[v] ? 1 : 0;
        total += f(c);
    }
    return total;
}

/// Exhaustive enumeration of all 2^|W| - 1 subfamilies (|W| <= 62).
template <typename Objective>
SubfamilyResult exhaustive_search(const OneInclusionGraph& g, Objective f) {
    const std::size_t m = g.vertex_count();
    std::vector<std::uint64_t> masks;
    for (const auto& e : g.edges()) {
        if (f(static_cast<std::int64_t>(e.members.size())) == 0)
            continue; // monotone objectives: contributes nothing to any subfamily
        std::uint64_t mk = 0;
        for (auto v : e.members)
            mk |= 1ull << v;
        masks.push_back(mk);
    }
    std::int64_t best_num = 0, best_den = 1;
    std::uint64_t best_mask = 1;
    if (!masks.empty()) {
        const std::uint64_t end = m == 64 ? ~0ull : (1ull << m);
        for (std::uint64_t mask = 1; mask < end; ++mask) {
            std::int64_t num = 0;
            for (auto mk : masks)
                num += f(std::popcount(mask & mk));
            std::int64_t den = std::popcount(mask);
            if (better(num, den, mask, best_num, best_den, best_mask)) {
                best_num = num;
                best_den = den;
                best_mask = mask;
            }
        }
    }
    std::vector<std::size_t> members;
    for (std::size_t v = 0; v < m; ++v)
        if (best_mask >> v & 1)
            members.push_back(v);
    return {Ratio(best_num, best_den), members, g.base().subfamily(members), true};
}

/// Exact densest subfamily by parametric minimum cut.
///
/// Every vertex lies in exactly n edges, so
///   sum_e (|e & F| - ell)_+ = n|F| - sum_e min(|e & F|, ell),
/// and maximizing the density means minimizing cost(F)/|F| with the
/// submodular cost(F) = sum_e min(|e & F|, ell). Writing
/// min(c, ell) = min_z (ell*z + c*(1-z)) gives a cut model with one node per
/// edge. Dinkelbach iteration on the ratio terminates at the exact optimum;
/// the tie-break (fewest members, then lexicographic) is recovered from the
/// minimal min-cut containing each vertex.
class DensestSubfamilySolver {
public:
    DensestSubfamilySolver(const OneInclusionGraph& g, int ell) : g_(g), ell_(ell) {
        small_.assign(g.vertex_count(), 0);
        for (std::size_t id = 0; id < g.edges().size(); ++id) {
            const auto& e = g.edges()[id];
            if (static_cast<int>(e.members.size()) <= ell)
                for (auto v : e.members)
                    ++small_[v];
            else
                big_.push_back(id);
        }
    }

    SubfamilyResult solve() const {
        const std::size_t nv = g_.vertex_count();
        std::vector<bool> all(nv, true);
        std::int64_t p = cost(all), q = static_cast<std::int64_t>(nv);
        while (true) {
            auto [val, side] = min_cut(p, q, std::nullopt);
            if (val >= 0)
                break;
            p = cost(side);
            q = count(side);
        }
        // Every optimal subfamily of minimum size is the minimal minimizer
        // containing one of its vertices.
        std::optional<std::vector<bool>> best;
        std::uint64_t best_size = 0;
        for (std::size_t v = 0; v < nv; ++v) {
            auto [val, side] = min_cut(p, q, v);
            if (val != 0)
                continue;
            auto sz = static_cast<std::uint64_t>(count(side));
            if (!best || sz < best_size || (sz == best_size && side_less(side, *best))) {
                best = side;
                best_size = sz;
            }
        }
        if (!best)
            throw InvariantViolation("densest-subfamily solver found no optimal set");
        std::vector<std::size_t> members;
        for (std::size_t v = 0; v < nv; ++v)
            if ((*best)[v])
                members.push_back(v);
        const std::int64_t n = g_.directions();
        return {Ratio(n * q - p, q), members, g_.base().subfamily(members), true};
    }

private:
    std::int64_t cost(const std::vector<bool>& in) const {
        std::int64_t total = 0;
        for (const auto& e : g_.edges()) {
            std::int64_t c = 0;
            for (auto v : e.members)
                c += in[v] ? 1 : 0;
            total += std::min<std::int64_t>(c, ell_);
        }
        return total;
    }

    static std::int64_t count(const std::vector<bool>& in) {
        return static_cast<std::int64_t>(std::count(in.begin(), in.end(), true));
    }

    static bool side_less(const std::vector<bool>& a, const std::vector<bool>& b) {
        for (std::size_t v = 0; v < a.size(); ++v)
            if (a[v] != b[v])
                return a[v];
        return false;
    }

    // min over F (containing `forced` if given) of q*cost(F) - p*|F|, with
    // the minimal minimizing F.
    std::pair<std::int64_t, std::vector<bool>> min_cut(std::int64_t p, std::int64_t q,
                                                        std::optional<std::size_t> forced) const {
        const std::size_t nv = g_.vertex_count();
        const int s = 0;
        const int first_edge = 1 + static_cast<int>(nv);
        const int t = first_edge + static_cast<int>(big_.size());
        MaxFlow flow(t + 1);
        std::int64_t offset = 0;
        std::int64_t inf = 1;
        for (std::size_t b = 0; b < big_.size(); ++b) {
            const auto& e = g_.edges()[big_[b]];
            for (auto v : e.members)
                flow.add_arc(1 + static_cast<int>(v), first_edge + static_cast<int>(b), q);
            flow.add_arc(first_edge + static_cast<int>(b), t, q * ell_);
            inf += q * ell_;
        }
        for (std::size_t v = 0; v < nv; ++v) {
            std::int64_t c = q * small_[v] - p;
            if (c > 0) {
                flow.add_arc(1 + static_cast<int>(v), t, c);
                inf += c;
            } else if (c < 0) {
                flow.add_arc(s, 1 + static_cast<int>(v), -c);
                offset += -c;
            }
        }
        if (forced)
            flow.add_arc(s, 1 + static_cast<int>(*forced), inf + offset);
        std::int64_t cut = flow.run(s, t);
        auto reach = flow.source_side(s);
        std::vector<bool> side(nv);
        for (std::size_t v = 0; v < nv; ++v)
            side[v] = reach[1 + v];
        return {cut - offset, side};
    }

    const OneInclusionGraph& g_;
    int ell_;
    std::vector<std::int64_t> small_;
    std::vector<std::size_t> big_;
};

template <typename Objective>
SubfamilyResult local_search(const OneInclusionGraph& g, Objective f) {
    const std::size_t m = g.vertex_count();
    std::vector<bool> in(m, true);
    std::int64_t cur_num = objective_of(g, in, f);
    std::int64_t cur_den = static_cast<std::int64_t>(m);
    while (true) {
        std::optional<std::size_t> best_flip;
        std::int64_t best_num = cur_num, best_den = cur_den;
        for (std::size_t v = 0; v < m; ++v) {
            if (in[v] && cur_den == 1)
                continue;
            in[v] = !in[v];
            std::int64_t num = objective_of(g, in, f);
            std::int64_t den = cur_den + (in[v] ? 1 : -1);
            in[v] = !in[v];
            if (static_cast<__int128>(num) * best_den > static_cast<__int128>(best_num) * den) {
                best_num = num;
                best_den = den;
                best_flip = v;
            }
        }
        if (!best_flip)
            break;
        in[*best_flip] = !in[*best_flip];
        cur_num = best_num;
        cur_den = best_den;
    }
    std::vector<std::size_t> members;
    for (std::size_t v = 0; v < m; ++v)
        if (in[v])
            members.push_back(v);
    return {Ratio(cur_num, cur_den), members, g.base().subfamily(members), false};
}

template <typename Objective>
SubfamilyResult exact_search(const OneInclusionGraph& g, Objective f) {
    if constexpr (std::is_same_v<Objective, EllExcess>)
        return DensestSubfamilySolver(g, f.ell).solve();
    else
        return exhaustive_search(g, f);
}

template <typename Objective>
SubfamilyResult max_subfamily(const HypothesisClass& w, Objective f, SearchMode mode,
                              const SearchOptions& opts) {
    OneInclusionGraph g(w);
    if (mode == SearchMode::exact) {
        const bool fits = std::is_same_v<Objective, EllExcess> || w.size() <= 62;
        if (w.size() <= opts.exact_cap && fits)
            return exact_search(g, f);
        if (!opts.allow_heuristic)
            throw BudgetExceeded("exact subfamily search needs |W| <= " + std::to_string(opts.exact_cap) +
                                 " but |W| = " + std::to_string(w.size()) +
                                 "; raise --budget-subsets or allow heuristic (lower-bound-only) mode");
    }
    return local_search(g, f);
}

} // namespace detail

/// Densest subfamily of W. Exact mode enumerates every non-empty subfamily;
/// heuristic mode returns a lower bound by single-vertex local search.
inline SubfamilyResult max_density_subfamily(const HypothesisClass& w, int ell,
                                             SearchMode mode = SearchMode::exact,
                                             const SearchOptions& opts = {}) {
    if (ell < 1)
        throw InvalidInput("list size ell must be >= 1");
    return detail::max_subfamily(w, EllExcess{ell}, mode, opts);
}

/// Brute-force densest subfamily over all non-empty subfamilies; kept as
/// an independent reference for the cut-based exact search.
inline SubfamilyResult exhaustive_max_density_subfamily(const HypothesisClass& w, int ell) {
    if (w.size() > 30)
        throw BudgetExceeded("exhaustive subfamily enumeration limited to |W| <= 30");
    return detail::exhaustive_search(OneInclusionGraph(w), EllExcess{ell});
}

struct MuResult {
    Ratio value;
    CoordSeq coords;        ///< maximizing coordinate set (0-based)
    SubfamilyResult best;   ///< maximizing subfamily of H|_coords
    bool exact = true;
};

namespace detail {
template <typename Objective>
MuResult maximize_over_restrictions(const HypothesisClass& h, int n_samples, Objective f,
                                    const SearchOptions& opts) {
    if (n_samples < 1)
        throw InvalidInput("sample size must be >= 1");
    const int top = std::min(n_samples, h.n());
    std::optional<MuResult> best;
    bool all_exact = true;
    for (int d = 1; d <= top; ++d) {
        for_each_combination(static_cast<std::size_t>(h.n()), static_cast<std::size_t>(d),
                             [&](const std::vector<std::size_t>& idx) {
                                 CoordSeq s(std::vector<int>(idx.begin(), idx.end()));
                                 auto w = restrict(h, s, false);
                                 auto r = max_subfamily(w, f, SearchMode::exact, opts);
                                 all_exact = all_exact && r.exact;
                                 if (!best || r.density > best->value)
                                     best = MuResult{r.density, s, std::move(r), true};
                                 return true;
                             });
    }
    best->exact = all_exact;
    return std::move(*best);
}
} // namespace detail

/// Maximum ell-density over restrictions of H to at most n_samples distinct
/// coordinates and all their finite subfamilies.
inline MuResult mu(const HypothesisClass& h, int n_samples, int ell, const SearchOptions& opts = {}) {
    if (ell < 1)
        throw InvalidInput("list size ell must be >= 1");
    return detail::maximize_over_restrictions(h, n_samples, EllExcess{ell}, opts);
}

/// The alternative maximum density (sum of |e| over non-trivial edges).
inline MuResult mu_prime(const HypothesisClass& h, int n_samples, const SearchOptions& opts = {}) {
    return detail::maximize_over_restrictions(h, n_samples, NontrivialEdgeMass{}, opts);
}

// ---------------------------------------------------------------------------
// List orientations

/// For each edge (by id), the vertices it is oriented to.
struct Orientation {
    int ell = 1;
    std::vector<std::vector<std::uint32_t>> assign;
};

inline void validate_orientation(const OneInclusionGraph& g, const Orientation& sigma) {
    if (sigma.assign.size() != g.edges().size())
        throw InvalidInput("orientation does not match graph: edge count differs");
    for (std::size_t id = 0; id < sigma.assign.size(); ++id) {
        const auto& a = sigma.assign[id];
        const auto& mem = g.edges()[id].members;
        if (static_cast<int>(a.size()) > sigma.ell)
            throw InvalidInput("orientation assigns more than ell vertices to an edge");
        for (auto v : a)
            if (!std::binary_search(mem.begin(), mem.end(), v))
                throw InvalidInput("orientation assigns a vertex outside its edge");
    }
}

/// ell-outdegree of every vertex: adjacent edges whose assigned set excludes it.
inline std::vector<int> outdegrees(const OneInclusionGraph& g, const Orientation& sigma) {
    validate_orientation(g, sigma);
    std::vector<int> out(g.vertex_count(), 0);
    for (std::size_t id = 0; id < sigma.assign.size(); ++id) {
        const auto& a = sigma.assign[id];
        for (auto v : g.edges()[id].members)
            if (std::find(a.begin(), a.end(), v) == a.end())
                ++out[v];
    }
    return out;
}

/// Orientation with maximum ell-outdegree <= t, if one exists. Max-flow:
/// source -> edge (cap min(ell,|e|)), edge -> member (cap 1),
/// vertex -> sink (cap (deg - t)_+); feasible iff all sink arcs saturate.
/// Edges with |e| <= ell are oriented to all members up front.
inline std::optional<Orientation> orientation_within(const OneInclusionGraph& g, int ell, int t) {
    const auto edges = g.edges();
    const std::size_t nv = g.vertex_count();
    Orientation sigma{ell, std::vector<std::vector<std::uint32_t>>(edges.size())};

    std::vector<std::int64_t> need(nv);
    for (std::size_t v = 0; v < nv; ++v)
        need[v] = std::max(g.degree(v) - t, 0);
    std::vector<std::size_t> big;
    for (std::size_t id = 0; id < edges.size(); ++id) {
        if (static_cast<int>(edges[id].members.size()) <= ell) {
            sigma.assign[id] = edges[id].members;
            for (auto v : edges[id].members)
                need[v] = std::max<std::int64_t>(need[v] - 1, 0);
        } else {
            big.push_back(id);
        }
    }
    std::int64_t demand = 0;
    for (auto x : need)
        demand += x;

    const int source = 0;
    const int first_vertex = 1 + static_cast<int>(big.size());
    const int sink = first_vertex + static_cast<int>(nv);
    MaxFlow flow(sink + 1);
    std::vector<std::vector<std::pair<std::uint32_t, int>>> arcs(big.size());
    for (std::size_t b = 0; b < big.size(); ++b) {
        flow.add_arc(source, 1 + static_cast<int>(b), ell);
        for (auto v : edges[big[b]].members)
            arcs[b].push_back({v, flow.add_arc(1 + static_cast<int>(b), first_vertex + static_cast<int>(v), 1)});
    }
    for (std::size_t v = 0; v < nv; ++v)
        if (need[v] > 0)
            flow.add_arc(first_vertex + static_cast<int>(v), sink, need[v]);
    if (flow.run(source, sink) != demand)
        return std::nullopt;

    for (std::size_t b = 0; b < big.size(); ++b) {
        auto& a = sigma.assign[big[b]];
        for (auto [v, arc] : arcs[b])
            if (flow.flow_on(arc) > 0)
                a.push_back(v);
        // pad to exactly ell members; extra members only lower outdegrees
        for (auto [v, arc] : arcs[b]) {
            if (static_cast<int>(a.size()) >= ell)
                break;
            if (flow.flow_on(arc) == 0)
                a.push_back(v);
        }
        std::sort(a.begin(), a.end());
    }
    return sigma;
}

struct OrientationResult {
    Orientation sigma;
    int t_star = 0;
    bool certified = false; ///< infeasibility at t_star - 1 was checked
};

/// Orientation minimizing the maximum ell-outdegree, by binary search on t
/// over [0, n] with exact max-flow feasibility.
inline OrientationResult min_max_orientation(const OneInclusionGraph& g, int ell) {
    if (ell < 1)
        throw InvalidInput("list size ell must be >= 1");
    int lo = 0, hi = g.directions();
    auto best = orientation_within(g, ell, hi);
    while (lo < hi) {
        int mid = lo + (hi - lo) / 2;
        if (auto s = orientation_within(g, ell, mid)) {
            hi = mid;
            best = std::move(s);
        } else {
            lo = mid + 1;
        }
    }
    OrientationResult r{std::move(*best), hi, false};
    r.certified = hi == 0 || !orientation_within(g, ell, hi - 1).has_value();
    return r;
}

/// {"edges":[{"dir":i,"key":[...],"assign":[...]}]}: dir is 1-based, assign
/// holds 0-based indices into the canonical vertex order.
inline nlohmann::json orientation_to_json(const OneInclusionGraph& g, const Orientation& sigma) {
    nlohmann::json edges = nlohmann::json::array();
    for (std::size_t id = 0; id < sigma.assign.size(); ++id) {
        const auto& e = g.edges()[id];
        edges.push_back({{"dir", e.dir + 1}, {"key", e.key}, {"assign", sigma.assign[id]}});
    }
    return nlohmann::json{{"ell", sigma.ell}, {"edges", edges}};
}

} // namespace dslab
