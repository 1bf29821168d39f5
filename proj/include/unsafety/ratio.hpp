#pragma once

#include <cstdint>
#include <string>

namespace unsafety {

/// Exact non-negative fraction. Rounding happens only when a value is
/// formatted, to one decimal place, half away from zero.
struct Ratio {
    std::uint64_t num = 0;
    std::uint64_t den = 0;

    bool empty() const { return den == 0; }
    double value() const { return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den); }

    /// 100 * num / den in tenths, rounded. 0 when empty.
    std::int64_t percent_tenths() const;
    /// num / den in tenths, rounded. 0 when empty.
    std::int64_t tenths() const;

    /// "40.0"
    std::string percent() const;
    /// "0.8"
    std::string decimal() const;

    /// Value equality (1/2 == 2/4). Empty ratios equal only each other.
    friend bool operator==(const Ratio& a, const Ratio& b) {
        if (a.empty() || b.empty()) {
            return a.empty() && b.empty();
        }
        return a.num * b.den == b.num * a.den;
    }
};

std::string format_tenths(std::int64_t tenths);

} // namespace unsafety
