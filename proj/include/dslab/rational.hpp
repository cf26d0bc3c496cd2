#pragma once

#include <compare>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <string>
#include <string_view>

#include "error.hpp"

namespace dslab {

/// Exact non-negative-denominator rational over 64-bit integers, always kept
/// in lowest terms. Densities are sums of edge excesses divided by a vertex
/// count, so 64 bits is ample at desk scale.
class Ratio {
public:
    constexpr Ratio() = default;
    constexpr Ratio(std::int64_t num) : num_(num) {} // NOLINT(implicit)
    Ratio(std::int64_t num, std::int64_t den) : num_(num), den_(den) {
        if (den_ == 0)
            throw InvalidInput("ratio with zero denominator");
        normalize();
    }

    std::int64_t num() const { return num_; }
    std::int64_t den() const { return den_; }

    double value() const { return static_cast<double>(num_) / static_cast<double>(den_); }

    std::int64_t ceil() const {
        std::int64_t q = num_ / den_;
        if (num_ % den_ != 0 && num_ > 0)
            ++q;
        return q;
    }

    std::string str() const { return std::to_string(num_) + "/" + std::to_string(den_); }

    static Ratio parse(std::string_view text) {
        auto slash = text.find('/');
        try {
            if (slash == std::string_view::npos)
                return Ratio(std::stoll(std::string(text)));
            return Ratio(std::stoll(std::string(text.substr(0, slash))),
                         std::stoll(std::string(text.substr(slash + 1))));
        } catch (const std::logic_error&) {
            throw InvalidInput("malformed rational '" + std::string(text) + "'");
        }
    }

    friend bool operator==(const Ratio& a, const Ratio& b) {
        return a.num_ == b.num_ && a.den_ == b.den_;
    }
    friend std::strong_ordering operator<=>(const Ratio& a, const Ratio& b) {
        __int128 lhs = static_cast<__int128>(a.num_) * b.den_;
        __int128 rhs = static_cast<__int128>(b.num_) * a.den_;
        if (lhs < rhs) return std::strong_ordering::less;
        if (lhs > rhs) return std::strong_ordering::greater;
        return std::strong_ordering::equal;
    }

    friend Ratio operator*(const Ratio& a, const Ratio& b) {
        return Ratio(a.num_ * b.num_, a.den_ * b.den_);
    }
    friend Ratio operator/(const Ratio& a, const Ratio& b) {
        return Ratio(a.num_ * b.den_, a.den_ * b.num_);
    }

    friend std::ostream& operator<<(std::ostream& os, const Ratio& r) { return os << r.str(); }

private:
    void normalize() {
        if (den_ < 0) {
            num_ = -num_;
            den_ = -den_;
        }
        auto g = std::gcd(num_, den_);
        if (g > 1) {
            num_ /= g;
            den_ /= g;
        }
    }

    std::int64_t num_ = 0;
    std::int64_t den_ = 1;
};

} // namespace dslab
