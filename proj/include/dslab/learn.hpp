#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "combinatorics.hpp"
#include "dims.hpp"
#include "error.hpp"
#include "hclass.hpp"
#include "oig.hpp"
#include "parallel.hpp"

namespace dslab {

/// At most ell distinct labels, ascending.
struct ListPrediction {
    std::vector<Label> labels;

    bool contains(Label y) const { return std::binary_search(labels.begin(), labels.end(), y); }
    std::size_t size() const { return labels.size(); }
    friend bool operator==(const ListPrediction&, const ListPrediction&) = default;
};

struct SupportPoint {
    int instance;
    Label label;
    double p;
};

/// Finite distribution over (instance, label) pairs. Instances index the
/// class table's coordinates.
struct SyntheticDistribution {
    std::vector<SupportPoint> support;
    std::optional<std::size_t> target; ///< realizing hypothesis, when known

    void validate(const HypothesisClass& h) const {
        if (support.empty())
            throw InvalidInput("distribution has empty support");
        double total = 0;
        for (const auto& s : support) {
            if (s.instance < 0 || s.instance >= h.n() || s.label < 1 || s.label > h.k() || !(s.p >= 0))
                throw InvalidInput("distribution support point out of range");
            total += s.p;
        }
        if (std::abs(total - 1.0) > 1e-12)
            throw InvalidInput("distribution weights sum to " + std::to_string(total) + ", not 1");
    }

    /// Index of some hypothesis with zero error, if any.
    std::optional<std::size_t> realizer(const HypothesisClass& h) const {
        for (std::size_t i = 0; i < h.size(); ++i) {
            bool ok = true;
            for (const auto& s : support)
                if (s.p > 0 && h.at(i, s.instance) != s.label) {
                    ok = false;
                    break;
                }
            if (ok)
                return i;
        }
        return std::nullopt;
    }

    template <typename Rng>
    LabeledSample sample(Rng& rng, std::size_t m) const {
        std::vector<double> cum;
        double acc = 0;
        for (const auto& s : support)
            cum.push_back(acc += s.p);
        LabeledSample out;
        out.points.reserve(m);
        for (std::size_t i = 0; i < m; ++i) {
            double u = uniform_unit(rng) * acc;
            auto j = static_cast<std::size_t>(std::upper_bound(cum.begin(), cum.end(), u) - cum.begin());
            j = std::min(j, support.size() - 1);
            out.points.push_back({support[j].instance, support[j].label});
        }
        return out;
    }

    /// Pr[y not in f(x)] summed exactly over the support.
    template <typename Predictor>
    double error(Predictor&& f) const {
        std::map<int, ListPrediction> cache;
        double e = 0;
        for (const auto& s : support) {
            auto it = cache.find(s.instance);
            if (it == cache.end())
                it = cache.emplace(s.instance, f(s.instance)).first;
            if (!it->second.contains(s.label))
                e += s.p;
        }
        return e;
    }

    /// Realizable: x uniform over the given instances (all by default), y = target(x).
    static SyntheticDistribution realizable(const HypothesisClass& h, std::size_t target,
                                            std::vector<int> instances = {}) {
        return noisy(h, target, 0.0, std::move(instances));
    }

    /// x uniform; with probability 1 - noise y = target(x), otherwise y is
    /// uniform over [k] (which may also hit target(x)).
    static SyntheticDistribution noisy(const HypothesisClass& h, std::size_t target, double noise,
                                       std::vector<int> instances = {}) {
        if (target >= h.size())
            throw InvalidInput("target hypothesis index out of range");
        if (noise < 0 || noise > 1)
            throw InvalidInput("noise rate must lie in [0, 1]");
        if (instances.empty())
            for (int x = 0; x < h.n(); ++x)
                instances.push_back(x);
        SyntheticDistribution d;
        const double px = 1.0 / static_cast<double>(instances.size());
        for (int x : instances) {
            Label t = h.at(target, x);
            if (noise == 0) {
                d.support.push_back({x, t, px});
                continue;
            }
            for (Label y = 1; y <= h.k(); ++y) {
                double p = noise / h.k() + (y == t ? 1 - noise : 0.0);
                d.support.push_back({x, y, px * p});
            }
        }
        if (noise == 0)
            d.target = target;
        return d;
    }
};

namespace detail {

// Distinct training instances with their labels; throws on conflicting labels.
inline std::map<int, Label> sample_labels(const LabeledSample& s) {
    std::map<int, Label> seen;
    for (auto [x, y] : s.points) {
        auto [it, fresh] = seen.emplace(x, y);
        if (!fresh && it->second != y)
            throw NotRealizable("instance " + std::to_string(x + 1) + " carries two labels");
    }
    return seen;
}

// Graph on the ascending distinct instances of the sample, plus the vertex of
// the sample's behaviour.
struct SampleGraph {
    std::vector<int> coords;
    OneInclusionGraph g;
    std::size_t truth;
};

inline SampleGraph sample_graph(const HypothesisClass& h, const std::map<int, Label>& labels) {
    std::vector<int> coords;
    std::vector<Label> behaviour;
    for (auto [x, y] : labels) {
        coords.push_back(x);
        behaviour.push_back(y);
    }
    auto w = restrict(h, CoordSeq(coords), false);
    auto v = w.find(behaviour);
    if (!v)
        throw NotRealizable("sample is not realizable by the class");
    return {std::move(coords), OneInclusionGraph(std::move(w)), *v};
}

} // namespace detail

/// One-inclusion list predictor: orient G(H|_{x_1..x_n, x}) with minimum
/// maximum ell-outdegree and read the test-direction edge that matches the
/// training labels. Repeated instances collapse to one coordinate (their
/// directions carry only singleton edges); instances are taken in ascending
/// order so the graph depends on the set of instances only.
inline ListPrediction oig_list_predict(const HypothesisClass& h, const LabeledSample& train, int x, int ell) {
    if (ell < 1)
        throw InvalidInput("list size ell must be >= 1");
    if (x < 0 || x >= h.n())
        throw InvalidInput("test instance out of range");
    train.validate(h);
    auto labels = detail::sample_labels(train);
    if (auto it = labels.find(x); it != labels.end()) {
        // the test direction has only singleton edges; still check realizability
        detail::sample_graph(h, labels);
        return {{it->second}};
    }
    std::vector<int> coords;
    std::vector<Label> key;
    int dir = 0;
    for (auto [c, y] : labels) {
        if (c < x)
            ++dir;
        coords.push_back(c);
        key.push_back(y);
    }
    coords.insert(coords.begin() + dir, x);
    OneInclusionGraph g(restrict(h, CoordSeq(coords), false));
    auto edge = g.find_edge(dir, key);
    if (!edge)
        throw NotRealizable("training sample is not realizable by the class");
    auto o = min_max_orientation(g, ell);
    ListPrediction out;
    for (auto v : o.sigma.assign[*edge])
        out.labels.push_back(g.base().at(v, dir));
    std::sort(out.labels.begin(), out.labels.end());
    return out;
}

struct LooResult {
    int mistakes = 0; ///< M_n
    int t_star = 0;
};

/// Leave-one-out mistakes counted on one orientation of G(H|_{x_1..x_n}):
/// held-out point i is missed exactly when the edge through the true
/// vertex in direction x_i is oriented away from it. Points whose instance
/// repeats elsewhere in the sample are never missed.
inline LooResult loo_error(const HypothesisClass& h, const LabeledSample& sample, int ell) {
    if (ell < 1)
        throw InvalidInput("list size ell must be >= 1");
    sample.validate(h);
    auto labels = detail::sample_labels(sample);
    auto sg = detail::sample_graph(h, labels);
    auto o = min_max_orientation(sg.g, ell);
    std::map<int, int> multiplicity;
    for (auto [x, y] : sample.points)
        ++multiplicity[x];
    LooResult r{0, o.t_star};
    for (std::size_t d = 0; d < sg.coords.size(); ++d) {
        if (multiplicity[sg.coords[d]] != 1)
            continue;
        const auto& a = o.sigma.assign[sg.g.edge_of(sg.truth, static_cast<int>(d))];
        if (!std::binary_search(a.begin(), a.end(), static_cast<std::uint32_t>(sg.truth)))
            ++r.mistakes;
    }
    if (r.mistakes > r.t_star)
        throw InvariantViolation("leave-one-out mistakes exceed the optimal outdegree");
    return r;
}

/// The ell labels appearing in the most lists; ties go to the smaller label.
inline ListPrediction topk_vote(const std::vector<ListPrediction>& lists, int ell) {
    if (lists.empty())
        throw InvalidInput("top-k vote over no lists");
    std::map<Label, std::size_t> count;
    for (const auto& l : lists)
        for (Label y : l.labels)
            ++count[y];
    std::vector<std::pair<Label, std::size_t>> ranked(count.begin(), count.end());
    std::stable_sort(ranked.begin(), ranked.end(), [](auto& a, auto& b) { return a.second > b.second; });
    ListPrediction out;
    for (std::size_t i = 0; i < ranked.size() && static_cast<int>(i) < ell; ++i)
        out.labels.push_back(ranked[i].first);
    std::sort(out.labels.begin(), out.labels.end());
    return out;
}

/// Top-ell vote over one-inclusion predictors trained on the prefixes
/// S_{<=t}, t = ceil(n/4) .. n-1.
class PrefixVotePredictor {
public:
    PrefixVotePredictor(HypothesisClass h, LabeledSample sample, int ell)
        : h_(std::move(h)), sample_(std::move(sample)), ell_(ell) {
        if (ell_ < 1)
            throw InvalidInput("list size ell must be >= 1");
        const std::size_t n = sample_.size();
        if (n < 8)
            throw InvalidInput("prefix vote needs a sample of size >= 8");
        sample_.validate(h_);
        detail::sample_graph(h_, detail::sample_labels(sample_));
        first_ = (n + 3) / 4;
        // prefixes with the same set of distinct instances predict alike
        std::map<int, Label> seen;
        for (std::size_t t = 1; t < n; ++t) {
            bool fresh = seen.emplace(sample_.points[t - 1].first, sample_.points[t - 1].second).second;
            if (t < first_)
                continue;
            if (fresh || group_end_.empty())
                group_end_.push_back(t);
            group_of_.push_back(group_end_.size() - 1);
        }
    }

    std::size_t first_prefix() const { return first_; }
    std::size_t prefix_count() const { return sample_.size() - first_; }
    int ell() const { return ell_; }

    /// Predictions of every prefix learner at x, in order of t.
    std::vector<ListPrediction> prefix_predictions(int x) const {
        std::vector<ListPrediction> by_group;
        for (auto end : group_end_)
            by_group.push_back(oig_list_predict(h_, sample_.prefix(end), x, ell_));
        std::vector<ListPrediction> out;
        for (auto g : group_of_)
            out.push_back(by_group[g]);
        return out;
    }

    ListPrediction operator()(int x) const { return topk_vote(prefix_predictions(x), ell_); }

private:
    HypothesisClass h_;
    LabeledSample sample_;
    int ell_;
    std::size_t first_ = 0;
    std::vector<std::size_t> group_end_; ///< first prefix length of each group
    std::vector<std::size_t> group_of_;  ///< group index of t = first_ + i
};

/// eps* = 4.82 (ell+1) (d + ln(2/delta)) / m.
inline double pac_bound(int ell, int d_ds, double delta, std::size_t m) {
    return 4.82 * (ell + 1) * (d_ds + std::log(2.0 / delta)) / static_cast<double>(m);
}

struct ExperimentReport {
    std::string class_id;
    int ell = 1;
    std::size_t m = 0;
    double delta = 0.1;
    std::size_t trials = 0;
    std::uint64_t seed = 0;
    int d_ds = 0;
    std::vector<double> errors;
    double quantile_err = 0;
    double bound = 0;

    bool pass() const { return quantile_err <= bound; }
};

/// Empirical (1-delta)-quantile: the ceil((1-delta) T)-th smallest value.
inline double upper_quantile(std::vector<double> v, double delta) {
    if (v.empty())
        return 0;
    std::sort(v.begin(), v.end());
    auto idx = static_cast<std::size_t>(std::ceil((1 - delta) * static_cast<double>(v.size()) - 1e-9));
    idx = std::clamp<std::size_t>(idx, 1, v.size());
    return v[idx - 1];
}

inline ExperimentReport pac_experiment(const HypothesisClass& h, const SyntheticDistribution& d, int ell,
                                       std::size_t m, double delta, std::size_t trials, std::uint64_t seed,
                                       unsigned jobs = 0, std::string class_id = {}) {
    d.validate(h);
    if (!d.realizer(h))
        throw NotRealizable("distribution is not realizable by the class");
    if (!(delta > 0 && delta < 1))
        throw InvalidInput("delta must lie in (0, 1)");
    ExperimentReport r;
    r.class_id = std::move(class_id);
    r.ell = ell;
    r.m = m;
    r.delta = delta;
    r.trials = trials;
    r.seed = seed;
    r.d_ds = ds_dimension(h, ell).value;
    r.errors.assign(trials, 0);
    parallel_for(trials, jobs, [&](std::size_t t) {
        std::mt19937_64 rng(stream_seed(seed, t));
        PrefixVotePredictor f(h, d.sample(rng, m), ell);
        r.errors[t] = d.error(f);
    });
    r.quantile_err = upper_quantile(r.errors, delta);
    r.bound = pac_bound(ell, r.d_ds, delta, m);
    return r;
}

inline nlohmann::json to_json(const ExperimentReport& r) {
    return {{"class", r.class_id},
            {"ell", r.ell},
            {"m", r.m},
            {"delta", r.delta},
            {"trials", r.trials},
            {"seed", r.seed},
            {"d_ds", r.d_ds},
            {"log", "natural"},
            {"quantile_err", r.quantile_err},
            {"bound", r.bound},
            {"verdict", r.pass() ? "PASS" : "FAIL"}};
}

} // namespace dslab
