#pragma once

/// @file model.hpp
/// @brief Program-facts data model shared by the frontend, graph builder,
/// analysis and metrics passes.
///
/// A Corpus is a set of PackageUnits. Each package owns its functions
/// (free functions, external declarations and implementation methods),
/// interfaces, implementations, globals and type declarations. Values are
/// built once by the frontend and treated as immutable afterwards.

#include <array>
#include <compare>
#include <cstdint>
#include <initializer_list>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace unsafety {

struct SourceLoc {
    std::string file;
    int line = 0;
    int column = 0;
};

std::string to_string(const SourceLoc& loc);

// ---------------------------------------------------------------------------
// Errors raised by model operations.

class ModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class UnboundVariableError : public ModelError {
public:
    explicit UnboundVariableError(const std::string& var);
    const std::string& variable() const { return variable_; }

private:
    std::string variable_;
};

class ArityMismatchError : public ModelError {
public:
    using ModelError::ModelError;
};

// ---------------------------------------------------------------------------
// Types

enum class TypeKind { Concrete, GenericVar, DynInterface, FnValue };

/// A flat type reference. Concrete and interface names are package
/// qualified ("pkg::Name") once the corpus has been resolved; before that
/// they hold the name as spelled in the source.
struct TypeRef {
    TypeKind kind = TypeKind::Concrete;
    std::string name;

    static TypeRef concrete(std::string name) { return {TypeKind::Concrete, std::move(name)}; }
    static TypeRef generic_var(std::string name) { return {TypeKind::GenericVar, std::move(name)}; }
    static TypeRef dyn_interface(std::string name) { return {TypeKind::DynInterface, std::move(name)}; }
    static TypeRef fn_value() { return {TypeKind::FnValue, {}}; }

    bool is_ground() const { return kind != TypeKind::GenericVar; }

    /// "pkg::TypeA", "dyn pkg::HasBaz", "fnptr" or the bare variable name.
    std::string display() const;

    friend bool operator==(const TypeRef&, const TypeRef&) = default;
    friend auto operator<=>(const TypeRef&, const TypeRef&) = default;
};

/// Ordered mapping from generic variable names to types. Values bound at a
/// call site inside an un-grounded caller may still be generic variables;
/// node identity requires a ground substitution (see make_node_key).
class Substitution {
public:
    using Entry = std::pair<std::string, TypeRef>;

    Substitution() = default;
    Substitution(std::initializer_list<Entry> entries);

    /// Throws ModelError if `var` is already bound.
    void bind(std::string var, TypeRef type);
    const TypeRef* find(std::string_view var) const;

    const std::vector<Entry>& entries() const { return entries_; }
    bool empty() const { return entries_.empty(); }
    std::size_t size() const { return entries_.size(); }
    bool is_ground() const;

    /// "T=pkg::TypeA,U=fnptr"
    std::string display() const;

    friend bool operator==(const Substitution&, const Substitution&) = default;

private:
    std::vector<Entry> entries_;
};

enum class Binding {
    Partial, ///< unbound variables are returned unchanged
    Ground,  ///< unbound variables raise UnboundVariableError
};

TypeRef apply_substitution(const TypeRef& t, const Substitution& s, Binding mode = Binding::Partial);

/// {k -> apply(v, outer)} for every (k, v) of `inner`.
Substitution compose(const Substitution& inner, const Substitution& outer);

// ---------------------------------------------------------------------------
// Unsafe operations

enum class UnsafeOpKind { UnsafeCall, RawDeref, GlobalAccess, InlineAsm, UnionField };

inline constexpr std::array<UnsafeOpKind, 5> kUnsafeOpKinds = {
    UnsafeOpKind::UnsafeCall, UnsafeOpKind::RawDeref, UnsafeOpKind::GlobalAccess,
    UnsafeOpKind::InlineAsm, UnsafeOpKind::UnionField};

std::string_view to_string(UnsafeOpKind kind);

// ---------------------------------------------------------------------------
// Statements

enum class CallForm {
    Path,     ///< f(..), pkg::f(..), Type::m(..), pkg::Type::m(..), T::m(..)
    Method,   ///< recv.m(..)
    Indirect, ///< indirect fp
};

enum class CallKind {
    Unresolved,
    Static,          ///< unique concrete, non-generic target
    Generic,         ///< generic target plus explicit type arguments
    Dynamic,         ///< interface method on a dyn receiver
    Indirect,        ///< call through a function value
    GenericReceiver, ///< interface method on a generic-typed receiver
};

std::string_view to_string(CallKind kind);

struct CallSiteRecord {
    CallForm form = CallForm::Path;
    std::vector<std::string> path;
    std::string receiver; ///< Method: receiver variable; Indirect: function value variable
    std::string method;
    std::vector<TypeRef> type_args;
    std::vector<std::string> args;
    bool in_unsafe_context = false;
    SourceLoc loc;

    // Filled in by name resolution.
    CallKind kind = CallKind::Unresolved;
    std::string target;      ///< function id (Static / Generic)
    std::string interface;   ///< qualified interface (Dynamic / GenericReceiver)
    std::string generic_var; ///< GenericReceiver
    bool target_unsafe = false;
};

struct Statement;

struct UnsafeBlock {
    std::vector<Statement> body;
    SourceLoc loc;
};

struct Primitive {
    UnsafeOpKind kind = UnsafeOpKind::RawDeref;
    std::string global; ///< GlobalAccess only
    bool write = false; ///< GlobalAccess only: @write_global vs @read_global
    SourceLoc loc;
};

struct LocalDecl {
    std::string name;
    TypeRef type;
    SourceLoc loc;
};

struct Statement {
    std::variant<CallSiteRecord, UnsafeBlock, Primitive, LocalDecl> node;
};

// ---------------------------------------------------------------------------
// Declarations

enum class Origin { Native, External, AbstractInterfaceMethod };

struct GenericParam {
    std::string name;
    std::optional<std::string> bound; ///< interface name
};

struct Param {
    std::string name; ///< "self" for receivers
    TypeRef type;
};

struct FunctionRecord {
    std::string id;        ///< pkg::name or pkg::Type::name
    std::string package;
    std::string container; ///< implementing type (impl methods) or interface (signatures)
    std::string name;
    std::string interface; ///< impl methods: implemented interface
    bool declared_unsafe = false;
    std::vector<GenericParam> generics;
    std::vector<Param> params;
    std::vector<Statement> body;
    Origin origin = Origin::Native;
    std::string abi; ///< External only: "C", "intrinsic" or "native"
    bool generated = false;
    SourceLoc loc;

    bool is_generic() const { return !generics.empty(); }
    bool is_impl_method() const { return !interface.empty(); }
};

struct InterfaceRecord {
    std::string name;
    std::string id; ///< pkg::name
    bool declared_unsafe = false;
    std::vector<FunctionRecord> methods; ///< origin AbstractInterfaceMethod, empty bodies
    SourceLoc loc;

    const FunctionRecord* method(std::string_view name) const;
};

struct ImplRecord {
    std::string interface; ///< qualified after resolution
    std::string type_name; ///< qualified after resolution
    bool declared_unsafe = false;
    std::vector<std::string> methods; ///< FunctionRecord ids
    bool generated = false;
    SourceLoc loc;
};

struct GlobalRecord {
    std::string name;
    bool is_mutable = false;
    SourceLoc loc;
};

struct TypeDecl {
    std::string name;
    SourceLoc loc;
};

struct PackageUnit {
    std::string name;
    std::vector<std::string> dependencies;
    std::vector<FunctionRecord> functions;
    std::vector<InterfaceRecord> interfaces;
    std::vector<ImplRecord> impls;
    std::vector<GlobalRecord> globals;
    std::vector<TypeDecl> types;
    SourceLoc loc;

    const FunctionRecord* function(std::string_view id) const;
    const GlobalRecord* global(std::string_view name) const;
};

/// Packages are kept sorted by name.
struct Corpus {
    std::vector<PackageUnit> packages;

    const PackageUnit* package(std::string_view name) const;
    PackageUnit* package(std::string_view name);
};

// ---------------------------------------------------------------------------
// Lookup tables over a resolved corpus. The index borrows from the corpus,
// which must outlive it.

class CorpusIndex {
public:
    explicit CorpusIndex(const Corpus& corpus);

    const Corpus& corpus() const { return *corpus_; }
    const PackageUnit* package(std::string_view name) const;
    const FunctionRecord* function(std::string_view id) const;
    const InterfaceRecord* interface(std::string_view qualified) const;
    /// The method implementing `method` of `interface` for concrete `type`.
    const FunctionRecord* impl_method(std::string_view interface, std::string_view type,
                                      std::string_view method) const;
    /// Every implementation method named `method` for concrete `type`.
    std::vector<const FunctionRecord*> methods_of(std::string_view type, std::string_view method) const;

private:
    const Corpus* corpus_;
    std::map<std::string, const PackageUnit*, std::less<>> packages_;
    std::map<std::string, const FunctionRecord*, std::less<>> functions_;
    std::map<std::string, const InterfaceRecord*, std::less<>> interfaces_;
    std::map<std::pair<std::string, std::string>, const ImplRecord*> impls_;
};

// ---------------------------------------------------------------------------
// Graph node identity

struct NodeKey {
    std::string value;

    friend bool operator==(const NodeKey&, const NodeKey&) = default;
    friend auto operator<=>(const NodeKey&, const NodeKey&) = default;
};

/// Canonical key for (function, ground substitution). The substitution must
/// bind exactly the function's generics (in any order); it is normalized to
/// declaration order. Throws ArityMismatchError or UnboundVariableError.
NodeKey make_node_key(const FunctionRecord& fn, const Substitution& s);

/// Substitution reordered to `fn`'s generics declaration order; same checks
/// as make_node_key.
Substitution normalize_substitution(const FunctionRecord& fn, const Substitution& s);

/// Key of the un-grounded representative of a generic function: "pkg::f<T,U>".
NodeKey ungrounded_key(const FunctionRecord& fn);

/// Ground key for non-generic functions, un-grounded key otherwise.
NodeKey representative_key(const FunctionRecord& fn);

// ---------------------------------------------------------------------------
// Body walking

/// Visits every statement of `body` in order, descending into unsafe
/// blocks. `depth` is the number of enclosing unsafe blocks.
template <typename Visitor>
void walk_statements(const std::vector<Statement>& body, Visitor&& visit, int depth = 0) {
    for (const auto& stmt : body) {
        visit(stmt, depth);
        if (const auto* block = std::get_if<UnsafeBlock>(&stmt.node)) {
            walk_statements(block->body, visit, depth + 1);
        }
    }
}

/// True if the statement is an unsafe operation: a primitive, or a call to a
/// declared-unsafe or external target. Requires a resolved call site.
bool is_unsafe_operation(const Statement& stmt);

bool contains_unsafe_operation(const std::vector<Statement>& body);
bool contains_unsafe_block(const std::vector<Statement>& body);

} // namespace unsafety
