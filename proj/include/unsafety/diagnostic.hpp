#pragma once

#include "unsafety/model.hpp"

#include <string>
#include <vector>

namespace unsafety {

enum class Severity { Error, Warning };

struct Diagnostic {
    Severity severity = Severity::Error;
    std::string code; ///< stable short identifier, e.g. "E-SYNTAX", "W-REDUNDANT-UNSAFE"
    std::string message;
    SourceLoc loc;
};

/// "file:line:col: error[E-SYNTAX]: message"
std::string format(const Diagnostic& d);

bool has_errors(const std::vector<Diagnostic>& diags);
std::size_t count(const std::vector<Diagnostic>& diags, Severity severity);

} // namespace unsafety
