#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <functional>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "combinatorics.hpp"
#include "error.hpp"

namespace dslab {

/// Labels are 1-based everywhere, matching [k] = {1..k}.
using Label = int;

/// A finite multiclass hypothesis class: distinct label vectors of length n
/// over [k], stored row-major in lexicographic order.
class HypothesisClass {
public:
    HypothesisClass(int k, int n, std::vector<std::vector<Label>> rows) : k_(k), n_(n) {
        if (k < 1)
            throw InvalidInput("label count k must be >= 1");
        if (n < 1)
            throw InvalidInput("coordinate count n must be >= 1");
        if (rows.empty())
            throw InvalidInput("hypothesis class must be non-empty");
        for (const auto& r : rows) {
            if (static_cast<int>(r.size()) != n)
                throw InvalidInput("ragged rows: expected length " + std::to_string(n) + ", got " +
                                   std::to_string(r.size()));
            for (Label y : r)
                if (y < 1 || y > k)
                    throw InvalidInput("label out of range: " + std::to_string(y) + " not in [1," +
                                       std::to_string(k) + "]");
        }
        std::sort(rows.begin(), rows.end());
        auto last = std::unique(rows.begin(), rows.end());
        duplicates_ = static_cast<std::size_t>(rows.end() - last);
        rows.erase(last, rows.end());
        data_.reserve(rows.size() * static_cast<std::size_t>(n));
        for (const auto& r : rows)
            data_.insert(data_.end(), r.begin(), r.end());
    }

    int k() const { return k_; }
    int n() const { return n_; }
    std::size_t size() const { return data_.size() / static_cast<std::size_t>(n_); }

    std::span<const Label> row(std::size_t i) const {
        return {data_.data() + i * static_cast<std::size_t>(n_), static_cast<std::size_t>(n_)};
    }
    Label at(std::size_t i, int coord) const { return data_[i * static_cast<std::size_t>(n_) + coord]; }

    std::vector<std::vector<Label>> rows() const {
        std::vector<std::vector<Label>> out;
        out.reserve(size());
        for (std::size_t i = 0; i < size(); ++i)
            out.emplace_back(row(i).begin(), row(i).end());
        return out;
    }

    /// Number of duplicate rows dropped while canonicalizing.
    std::size_t duplicates_removed() const { return duplicates_; }

    /// Index of an exact row, by binary search over the canonical order.
    std::optional<std::size_t> find(std::span<const Label> v) const {
        std::size_t lo = 0, hi = size();
        while (lo < hi) {
            std::size_t mid = (lo + hi) / 2;
            auto r = row(mid);
            if (std::lexicographical_compare(r.begin(), r.end(), v.begin(), v.end()))
                lo = mid + 1;
            else
                hi = mid;
        }
        if (lo < size() && std::ranges::equal(row(lo), v))
            return lo;
        return std::nullopt;
    }

    /// Distinct labels realized at a coordinate, ascending.
    std::vector<Label> labels_at(int coord) const {
        std::vector<Label> out;
        for (std::size_t i = 0; i < size(); ++i)
            out.push_back(at(i, coord));
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }

    /// Subfamily given by ascending member indices.
    HypothesisClass subfamily(std::span<const std::size_t> members) const {
        std::vector<std::vector<Label>> rs;
        rs.reserve(members.size());
        for (auto i : members)
            rs.emplace_back(row(i).begin(), row(i).end());
        return HypothesisClass(k_, n_, std::move(rs));
    }

    bool contains(const HypothesisClass& other) const {
        if (other.n_ != n_)
            return false;
        for (std::size_t i = 0; i < other.size(); ++i)
            if (!find(other.row(i)))
                return false;
        return true;
    }

    friend bool operator==(const HypothesisClass& a, const HypothesisClass& b) {
        return a.k_ == b.k_ && a.n_ == b.n_ && a.data_ == b.data_;
    }

private:
    int k_;
    int n_;
    std::vector<Label> data_;
    std::size_t duplicates_ = 0;
};

/// Ordered coordinate indices (0-based in the C++ API, 1-based in files and
/// on the command line).
struct CoordSeq {
    std::vector<int> coords;

    CoordSeq() = default;
    explicit CoordSeq(std::vector<int> c) : coords(std::move(c)) {}

    static CoordSeq identity(int n) {
        CoordSeq s;
        for (int i = 0; i < n; ++i)
            s.coords.push_back(i);
        return s;
    }

    std::size_t size() const { return coords.size(); }

    bool has_duplicates() const {
        std::set<int> seen(coords.begin(), coords.end());
        return seen.size() != coords.size();
    }

    void validate(int n, bool allow_duplicates) const {
        if (coords.empty())
            throw InvalidInput("coordinate sequence must be non-empty");
        for (int c : coords)
            if (c < 0 || c >= n)
                throw InvalidInput("index out of range: coordinate " + std::to_string(c + 1) +
                                   " not in [1," + std::to_string(n) + "]");
        if (!allow_duplicates && has_duplicates())
            throw InvalidInput("duplicate coordinates not permitted here");
    }

    friend bool operator==(const CoordSeq&, const CoordSeq&) = default;
};

/// Labeled points: (instance, label) where an instance is a coordinate of
/// the class table.
struct LabeledSample {
    std::vector<std::pair<int, Label>> points;

    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }

    LabeledSample prefix(std::size_t t) const {
        LabeledSample s;
        s.points.assign(points.begin(), points.begin() + static_cast<std::ptrdiff_t>(t));
        return s;
    }

    void validate(const HypothesisClass& h) const {
        for (auto [x, y] : points) {
            if (x < 0 || x >= h.n())
                throw InvalidInput("sample instance out of range: " + std::to_string(x + 1));
            if (y < 1 || y > h.k())
                throw InvalidInput("sample label out of range: " + std::to_string(y));
        }
    }
};

/// Projection H|_S; duplicates in S are permitted only when asked for.
inline HypothesisClass restrict(const HypothesisClass& h, const CoordSeq& s,
                                bool allow_duplicates = true) {
    s.validate(h.n(), allow_duplicates);
    std::vector<std::vector<Label>> rows;
    rows.reserve(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) {
        std::vector<Label> r;
        r.reserve(s.size());
        for (int c : s.coords)
            r.push_back(h.at(i, c));
        rows.push_back(std::move(r));
    }
    return HypothesisClass(h.k(), static_cast<int>(s.size()), std::move(rows));
}

/// Index of some hypothesis consistent with every point, if any.
inline std::optional<std::size_t> consistent_hypothesis(const HypothesisClass& h,
                                                        const LabeledSample& s) {
    for (std::size_t i = 0; i < h.size(); ++i) {
        bool ok = true;
        for (auto [x, y] : s.points)
            if (h.at(i, x) != y) {
                ok = false;
                break;
            }
        if (ok)
            return i;
    }
    return std::nullopt;
}

/// The product class [k]^s x [ell]^(m-s).
inline HypothesisClass gen_cube(int k, int ell, int s, int m) {
    if (ell < 1 || ell >= k)
        throw InvalidInput("gen_cube requires 1 <= ell < k");
    if (m < 1 || s < 0 || s > m)
        throw InvalidInput("gen_cube requires 0 <= s <= m and m >= 1");
    std::vector<std::vector<Label>> rows;
    std::vector<Label> cur(static_cast<std::size_t>(m), 1);
    while (true) {
        rows.push_back(cur);
        int i = m - 1;
        while (i >= 0) {
            int cap = i < s ? k : ell;
            if (cur[i] < cap) {
                ++cur[i];
                break;
            }
            cur[i] = 1;
            --i;
        }
        if (i < 0)
            break;
    }
    return HypothesisClass(k, m, std::move(rows));
}

/// Uniformly sampled distinct vectors of [k]^n, reproducible from the seed.
inline HypothesisClass gen_random(int k, int n, std::size_t target_size, std::uint64_t seed) {
    if (k < 1 || n < 1)
        throw InvalidInput("gen_random requires k >= 1 and n >= 1");
    const std::uint64_t universe = saturating_pow(static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(n));
    if (target_size < 1 || target_size > universe)
        throw InvalidInput("target_size exceeds k^n");
    std::mt19937_64 rng(seed);
    auto decode = [&](std::uint64_t code) {
        std::vector<Label> r(static_cast<std::size_t>(n));
        for (int i = n - 1; i >= 0; --i) {
            r[i] = static_cast<Label>(code % static_cast<std::uint64_t>(k)) + 1;
            code /= static_cast<std::uint64_t>(k);
        }
        return r;
    };
    std::vector<std::vector<Label>> rows;
    if (universe <= (1u << 20)) {
        // partial Fisher-Yates over all codes
        std::vector<std::uint64_t> codes(universe);
        for (std::uint64_t c = 0; c < universe; ++c)
            codes[c] = c;
        for (std::size_t i = 0; i < target_size; ++i) {
            auto j = i + uniform_below(rng, universe - i);
            std::swap(codes[i], codes[j]);
            rows.push_back(decode(codes[i]));
        }
    } else {
        std::set<std::vector<Label>> seen;
        while (seen.size() < target_size) {
            std::vector<Label> r(static_cast<std::size_t>(n));
            for (auto& y : r)
                y = static_cast<Label>(uniform_below(rng, static_cast<std::uint64_t>(k))) + 1;
            seen.insert(std::move(r));
        }
        rows.assign(seen.begin(), seen.end());
    }
    return HypothesisClass(k, n, std::move(rows));
}

// ---------------------------------------------------------------------------
// Serialization

inline nlohmann::json to_json(const HypothesisClass& h) {
    return nlohmann::json{{"k", h.k()}, {"n", h.n()}, {"hyps", h.rows()}};
}

inline HypothesisClass class_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("k") || !j.contains("n") || !j.contains("hyps"))
        throw InvalidInput("malformed class JSON: expected {\"k\",\"n\",\"hyps\"}");
    if (!j["k"].is_number_integer() || !j["n"].is_number_integer() || !j["hyps"].is_array())
        throw InvalidInput("malformed class JSON: k and n must be integers, hyps an array");
    std::vector<std::vector<Label>> rows;
    for (const auto& r : j["hyps"]) {
        if (!r.is_array())
            throw InvalidInput("malformed class JSON: each hypothesis must be an array");
        std::vector<Label> row;
        for (const auto& v : r) {
            if (!v.is_number_integer())
                throw InvalidInput("malformed class JSON: labels must be integers");
            row.push_back(v.get<Label>());
        }
        rows.push_back(std::move(row));
    }
    return HypothesisClass(j["k"].get<int>(), j["n"].get<int>(), std::move(rows));
}

inline HypothesisClass parse_class(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw InvalidInput(std::string("malformed JSON: ") + e.what());
    }
    return class_from_json(j);
}

inline HypothesisClass load_class(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw InvalidInput("cannot read class file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_class(ss.str());
}

inline void save_class(const HypothesisClass& h, const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw InvalidInput("cannot write class file '" + path + "'");
    out << to_json(h).dump() << '\n';
}

/// One hypothesis per row, comma-separated labels.
inline std::string to_csv(const HypothesisClass& h) {
    std::string out;
    for (std::size_t i = 0; i < h.size(); ++i) {
        auto r = h.row(i);
        for (std::size_t c = 0; c < r.size(); ++c) {
            if (c)
                out += ',';
            out += std::to_string(r[c]);
        }
        out += '\n';
    }
    return out;
}

} // namespace dslab
