#include "unsafety/model.hpp"

#include <algorithm>
#include <sstream>

namespace unsafety {

std::string to_string(const SourceLoc& loc) {
    std::ostringstream os;
    os << (loc.file.empty() ? "<input>" : loc.file) << ':' << loc.line << ':' << loc.column;
    return os.str();
}

UnboundVariableError::UnboundVariableError(const std::string& var)
    : ModelError("unbound generic variable '" + var + "'"), variable_(var) {}

std::string TypeRef::display() const {
    switch (kind) {
    case TypeKind::Concrete:
    case TypeKind::GenericVar:
        return name;
    case TypeKind::DynInterface:
        return "dyn " + name;
    case TypeKind::FnValue:
        return "fnptr";
    }
    return name;
}

Substitution::Substitution(std::initializer_list<Entry> entries) {
    for (const auto& [var, type] : entries) {
        bind(var, type);
    }
}

void Substitution::bind(std::string var, TypeRef type) {
    if (find(var) != nullptr) {
        throw ModelError("generic variable '" + var + "' bound twice");
    }
    entries_.emplace_back(std::move(var), std::move(type));
}

const TypeRef* Substitution::find(std::string_view var) const {
    for (const auto& [name, type] : entries_) {
        if (name == var) {
            return &type;
        }
    }
    return nullptr;
}

bool Substitution::is_ground() const {
    return std::all_of(entries_.begin(), entries_.end(),
                       [](const Entry& e) { return e.second.is_ground(); });
}

std::string Substitution::display() const {
    std::string out;
    for (const auto& [var, type] : entries_) {
        if (!out.empty()) {
            out += ',';
        }
        out += var;
        out += '=';
        out += type.display();
    }
    return out;
}

TypeRef apply_substitution(const TypeRef& t, const Substitution& s, Binding mode) {
    if (t.kind != TypeKind::GenericVar) {
        return t;
    }
    if (const TypeRef* bound = s.find(t.name)) {
        return *bound;
    }
    if (mode == Binding::Ground) {
        throw UnboundVariableError(t.name);
    }
    return t;
}

Substitution compose(const Substitution& inner, const Substitution& outer) {
    Substitution out;
    for (const auto& [var, type] : inner.entries()) {
        out.bind(var, apply_substitution(type, outer));
    }
    return out;
}

std::string_view to_string(UnsafeOpKind kind) {
    switch (kind) {
    case UnsafeOpKind::UnsafeCall:
        return "unsafe_call";
    case UnsafeOpKind::RawDeref:
        return "raw_deref";
    case UnsafeOpKind::GlobalAccess:
        return "global_access";
    case UnsafeOpKind::InlineAsm:
        return "inline_asm";
    case UnsafeOpKind::UnionField:
        return "union_field";
    }
    return "?";
}

std::string_view to_string(CallKind kind) {
    switch (kind) {
    case CallKind::Unresolved:
        return "unresolved";
    case CallKind::Static:
        return "static";
    case CallKind::Generic:
        return "generic";
    case CallKind::Dynamic:
        return "dynamic";
    case CallKind::Indirect:
        return "indirect";
    case CallKind::GenericReceiver:
        return "generic-receiver";
    }
    return "?";
}

const FunctionRecord* InterfaceRecord::method(std::string_view name) const {
    for (const auto& m : methods) {
        if (m.name == name) {
            return &m;
        }
    }
    return nullptr;
}

const FunctionRecord* PackageUnit::function(std::string_view id) const {
    for (const auto& fn : functions) {
        if (fn.id == id) {
            return &fn;
        }
    }
    return nullptr;
}

const GlobalRecord* PackageUnit::global(std::string_view name) const {
    for (const auto& g : globals) {
        if (g.name == name) {
            return &g;
        }
    }
    return nullptr;
}

const PackageUnit* Corpus::package(std::string_view name) const {
    auto it = std::lower_bound(packages.begin(), packages.end(), name,
                               [](const PackageUnit& p, std::string_view n) { return p.name < n; });
    return (it != packages.end() && it->name == name) ? &*it : nullptr;
}

PackageUnit* Corpus::package(std::string_view name) {
    return const_cast<PackageUnit*>(std::as_const(*this).package(name));
}

CorpusIndex::CorpusIndex(const Corpus& corpus) : corpus_(&corpus) {
    for (const auto& pkg : corpus.packages) {
        packages_.emplace(pkg.name, &pkg);
        for (const auto& fn : pkg.functions) {
            functions_.emplace(fn.id, &fn);
        }
        for (const auto& iface : pkg.interfaces) {
            interfaces_.emplace(iface.id, &iface);
        }
        for (const auto& impl : pkg.impls) {
            impls_.emplace(std::make_pair(impl.interface, impl.type_name), &impl);
        }
    }
}

const PackageUnit* CorpusIndex::package(std::string_view name) const {
    auto it = packages_.find(name);
    return it == packages_.end() ? nullptr : it->second;
}

const FunctionRecord* CorpusIndex::function(std::string_view id) const {
    auto it = functions_.find(id);
    return it == functions_.end() ? nullptr : it->second;
}

const InterfaceRecord* CorpusIndex::interface(std::string_view qualified) const {
    auto it = interfaces_.find(qualified);
    return it == interfaces_.end() ? nullptr : it->second;
}

const FunctionRecord* CorpusIndex::impl_method(std::string_view interface, std::string_view type,
                                               std::string_view method) const {
    auto it = impls_.find(std::make_pair(std::string(interface), std::string(type)));
    if (it == impls_.end()) {
        return nullptr;
    }
    for (const auto& id : it->second->methods) {
        const FunctionRecord* fn = function(id);
        if (fn != nullptr && fn->name == method) {
            return fn;
        }
    }
    return nullptr;
}

std::vector<const FunctionRecord*> CorpusIndex::methods_of(std::string_view type, std::string_view method) const {
    std::vector<const FunctionRecord*> out;
    for (const auto& [key, impl] : impls_) {
        if (key.second != type) {
            continue;
        }
        for (const auto& id : impl->methods) {
            const FunctionRecord* fn = function(id);
            if (fn != nullptr && fn->name == method) {
                out.push_back(fn);
            }
        }
    }
    return out;
}

Substitution normalize_substitution(const FunctionRecord& fn, const Substitution& s) {
    if (s.size() != fn.generics.size()) {
        throw ArityMismatchError("substitution for '" + fn.id + "' binds " + std::to_string(s.size()) +
                                 " variables, function declares " + std::to_string(fn.generics.size()));
    }
    Substitution out;
    for (const auto& g : fn.generics) {
        const TypeRef* bound = s.find(g.name);
        if (bound == nullptr) {
            throw ArityMismatchError("substitution for '" + fn.id + "' does not bind '" + g.name + "'");
        }
        if (!bound->is_ground()) {
            throw UnboundVariableError(bound->name);
        }
        out.bind(g.name, *bound);
    }
    return out;
}

NodeKey make_node_key(const FunctionRecord& fn, const Substitution& s) {
    Substitution normalized = normalize_substitution(fn, s);
    if (normalized.empty()) {
        return NodeKey{fn.id};
    }
    return NodeKey{fn.id + "<" + normalized.display() + ">"};
}

NodeKey ungrounded_key(const FunctionRecord& fn) {
    std::string key = fn.id + "<";
    for (std::size_t i = 0; i < fn.generics.size(); ++i) {
        if (i != 0) {
            key += ',';
        }
        key += fn.generics[i].name;
    }
    key += '>';
    return NodeKey{std::move(key)};
}

NodeKey representative_key(const FunctionRecord& fn) {
    return fn.is_generic() ? ungrounded_key(fn) : NodeKey{fn.id};
}

bool is_unsafe_operation(const Statement& stmt) {
    if (std::holds_alternative<Primitive>(stmt.node)) {
        return true;
    }
    if (const auto* call = std::get_if<CallSiteRecord>(&stmt.node)) {
        return call->target_unsafe;
    }
    return false;
}

bool contains_unsafe_operation(const std::vector<Statement>& body) {
    bool found = false;
    walk_statements(body, [&](const Statement& stmt, int) { found = found || is_unsafe_operation(stmt); });
    return found;
}

bool contains_unsafe_block(const std::vector<Statement>& body) {
    return std::any_of(body.begin(), body.end(), [](const Statement& stmt) {
        return std::holds_alternative<UnsafeBlock>(stmt.node);
    });
}

} // namespace unsafety
