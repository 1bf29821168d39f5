#pragma once

/// @file frontend.hpp
/// @brief Mini-language frontend: lexing, parsing, name resolution and the
/// unsafe-usage discipline check.
///
/// The language captures the constructs the safety analysis needs and
/// nothing else: packages with `use` dependencies, type and interface
/// declarations, implementations, generics with a single interface bound,
/// dyn-interface and function-value parameters, unsafe blocks, functions,
/// interfaces and implementations, extern declarations, mutable globals and
/// the unsafe primitives (@deref_ptr, @asm, @union_field, @read_global,
/// @write_global). There are no expressions, values or control flow.

#include "unsafety/diagnostic.hpp"
#include "unsafety/model.hpp"

#include <span>
#include <string>
#include <vector>

namespace unsafety::frontend {

enum class TokenKind { Keyword, Identifier, Punctuation, AbiString };

struct Token {
    TokenKind kind = TokenKind::Identifier;
    std::string lexeme; ///< AbiString lexemes include the quotes
    int line = 1;
    int column = 1;
};

struct LexResult {
    std::vector<Token> tokens;
    std::vector<Diagnostic> diagnostics;
};

LexResult tokenize(std::string_view source, const std::string& file = {});

struct SourceFile {
    std::string path;
    std::string text;
};

struct ParseResult {
    Corpus corpus;
    std::vector<Diagnostic> diagnostics;
};

/// Parses every file into a package. Packages are sorted by name, so the
/// result does not depend on file order. Reports syntax errors, duplicate
/// declarations and dependency cycles.
ParseResult parse_corpus(std::span<const SourceFile> files);

struct ResolveResult {
    Corpus corpus;
    std::vector<Diagnostic> diagnostics;
};

/// Binds and classifies every call site, qualifies type and interface
/// names, and validates implementations against their interfaces.
ResolveResult resolve_names(Corpus corpus);

/// Errors for unsafe operations outside an unsafe context and
/// W-REDUNDANT-UNSAFE warnings for unsafe blocks without unsafe operations.
/// Requires a resolved corpus.
std::vector<Diagnostic> check_unsafe_discipline(const Corpus& corpus);

/// Source text for one parsed (unresolved) package.
std::string print_package(const PackageUnit& pkg);

/// parse + resolve + discipline check. `corpus` is only meaningful when
/// `diagnostics` has no errors.
struct LoadResult {
    Corpus corpus;
    std::vector<Diagnostic> diagnostics;
    bool ok() const { return !has_errors(diagnostics); }
};

LoadResult load_corpus(std::span<const SourceFile> files);

} // namespace unsafety::frontend
