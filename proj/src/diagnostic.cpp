#include "unsafety/diagnostic.hpp"

#include <algorithm>

namespace unsafety {

std::string format(const Diagnostic& d) {
    std::string out = to_string(d.loc);
    out += d.severity == Severity::Error ? ": error[" : ": warning[";
    out += d.code;
    out += "]: ";
    out += d.message;
    return out;
}

bool has_errors(const std::vector<Diagnostic>& diags) {
    return count(diags, Severity::Error) != 0;
}

std::size_t count(const std::vector<Diagnostic>& diags, Severity severity) {
    return static_cast<std::size_t>(std::count_if(
        diags.begin(), diags.end(), [severity](const Diagnostic& d) { return d.severity == severity; }));
}

} // namespace unsafety
