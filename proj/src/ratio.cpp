#include "unsafety/ratio.hpp"

namespace unsafety {

namespace {

std::int64_t rounded(std::uint64_t num, std::uint64_t den, std::uint64_t scale) {
    if (den == 0) {
        return 0;
    }
    return static_cast<std::int64_t>((2 * scale * num + den) / (2 * den));
}

} // namespace

std::int64_t Ratio::percent_tenths() const { return rounded(num, den, 1000); }

std::int64_t Ratio::tenths() const { return rounded(num, den, 10); }

std::string Ratio::percent() const { return format_tenths(percent_tenths()); }

std::string Ratio::decimal() const { return format_tenths(tenths()); }

std::string format_tenths(std::int64_t tenths) {
    std::string sign = tenths < 0 ? "-" : "";
    std::uint64_t magnitude = tenths < 0 ? static_cast<std::uint64_t>(-tenths) : static_cast<std::uint64_t>(tenths);
    return sign + std::to_string(magnitude / 10) + "." + std::to_string(magnitude % 10);
}

} // namespace unsafety
