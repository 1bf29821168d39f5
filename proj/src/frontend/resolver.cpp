#include "unsafety/frontend.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <set>

namespace unsafety::frontend {

namespace {

class Resolver {
public:
    Resolver(Corpus& corpus, std::vector<Diagnostic>& diags) : corpus_(corpus), diags_(diags) {}

    void run() {
        index_packages();
        for (auto& pkg : corpus_.packages) {
            resolve_interfaces(pkg);
        }
        for (auto& pkg : corpus_.packages) {
            resolve_signatures(pkg);
            resolve_impls(pkg);
        }
        for (auto& pkg : corpus_.packages) {
            for (auto& fn : pkg.functions) {
                if (fn.origin == Origin::Native) {
                    resolve_body(pkg, fn);
                }
            }
        }
    }

private:
    struct ImplEntry {
        const ImplRecord* impl = nullptr;
        const PackageUnit* package = nullptr;
    };

    using Scope = std::map<std::string, TypeRef>;

    struct BodyContext {
        const PackageUnit* pkg = nullptr;
        const FunctionRecord* fn = nullptr;
        std::vector<Scope> scopes;

        const TypeRef* lookup(const std::string& name) const {
            for (auto it = scopes.rbegin(); it != scopes.rend(); ++it) {
                auto found = it->find(name);
                if (found != it->end()) {
                    return &found->second;
                }
            }
            return nullptr;
        }

        const GenericParam* generic(const std::string& name) const {
            for (const auto& g : fn->generics) {
                if (g.name == name) {
                    return &g;
                }
            }
            return nullptr;
        }
    };

    void error(std::string code, std::string message, const SourceLoc& loc) {
        diags_.push_back(Diagnostic{Severity::Error, std::move(code), std::move(message), loc});
    }

    // ---- packages ------------------------------------------------------

    void index_packages() {
        for (auto& pkg : corpus_.packages) {
            for (const auto& dep : pkg.dependencies) {
                if (corpus_.package(dep) == nullptr) {
                    error("E-UNKNOWN-PACKAGE", "package '" + pkg.name + "' uses unknown package '" + dep + "'",
                          pkg.loc);
                }
            }
            for (const auto& t : pkg.types) {
                types_.insert(pkg.name + "::" + t.name);
            }
            for (auto& iface : pkg.interfaces) {
                interfaces_.emplace(iface.id, &iface);
            }
            for (const auto& fn : pkg.functions) {
                functions_.emplace(fn.id, &fn);
            }
        }
        for (const auto& pkg : corpus_.packages) {
            std::set<std::string>& closure = closure_[pkg.name];
            std::vector<std::string> stack{pkg.name};
            while (!stack.empty()) {
                std::string name = stack.back();
                stack.pop_back();
                if (!closure.insert(name).second) {
                    continue;
                }
                if (const PackageUnit* p = corpus_.package(name)) {
                    stack.insert(stack.end(), p->dependencies.begin(), p->dependencies.end());
                }
            }
        }
    }

    bool in_scope(const PackageUnit& pkg, const std::string& other) const {
        return other == pkg.name ||
               std::find(pkg.dependencies.begin(), pkg.dependencies.end(), other) != pkg.dependencies.end();
    }

    /// Own package first, then direct dependencies.
    template <typename Has>
    std::optional<std::string> lookup_name(const PackageUnit& pkg, const std::string& name, const SourceLoc& loc,
                                           const char* what, const char* unknown_code, Has&& has) {
        if (has(pkg, name)) {
            return pkg.name + "::" + name;
        }
        std::vector<std::string> found;
        for (const auto& dep : pkg.dependencies) {
            const PackageUnit* p = corpus_.package(dep);
            if (p != nullptr && has(*p, name)) {
                found.push_back(dep + "::" + name);
            }
        }
        if (found.size() == 1) {
            return found.front();
        }
        if (found.empty()) {
            error(unknown_code, std::string("unknown ") + what + " '" + name + "' in package '" + pkg.name + "'", loc);
        } else {
            error("E-AMBIGUOUS-NAME",
                  std::string(what) + " '" + name + "' is declared by several dependencies (" + found[0] + ", " +
                      found[1] + ")",
                  loc);
        }
        return std::nullopt;
    }

    std::optional<std::string> lookup_type(const PackageUnit& pkg, const std::string& name, const SourceLoc& loc) {
        return lookup_name(pkg, name, loc, "type", "E-UNKNOWN-TYPE", [](const PackageUnit& p, const std::string& n) {
            return std::any_of(p.types.begin(), p.types.end(), [&](const TypeDecl& t) { return t.name == n; });
        });
    }

    std::optional<std::string> lookup_interface(const PackageUnit& pkg, const std::string& name,
                                                const SourceLoc& loc) {
        return lookup_name(pkg, name, loc, "interface", "E-UNKNOWN-INTERFACE",
                           [](const PackageUnit& p, const std::string& n) {
                               return std::any_of(p.interfaces.begin(), p.interfaces.end(),
                                                  [&](const InterfaceRecord& i) { return i.name == n; });
                           });
    }

    /// Qualifies concrete and interface names in place.
    bool resolve_type(const PackageUnit& pkg, TypeRef& t, const SourceLoc& loc) {
        if (t.kind == TypeKind::Concrete) {
            auto q = lookup_type(pkg, t.name, loc);
            if (!q) {
                return false;
            }
            t.name = *q;
        } else if (t.kind == TypeKind::DynInterface) {
            auto q = lookup_interface(pkg, t.name, loc);
            if (!q) {
                return false;
            }
            t.name = *q;
        }
        return true;
    }

    // ---- declarations --------------------------------------------------

    void resolve_interfaces(PackageUnit& pkg) {
        for (auto& iface : pkg.interfaces) {
            for (auto& sig : iface.methods) {
                for (auto& p : sig.params) {
                    resolve_type(pkg, p.type, sig.loc);
                }
            }
        }
    }

    void resolve_signatures(PackageUnit& pkg) {
        for (auto& fn : pkg.functions) {
            for (auto& g : fn.generics) {
                if (g.bound) {
                    auto q = lookup_interface(pkg, *g.bound, fn.loc);
                    if (q) {
                        g.bound = *q;
                    }
                }
            }
            if (fn.is_impl_method()) {
                continue; // receiver and parameters resolved with the implementation
            }
            for (auto& p : fn.params) {
                resolve_type(pkg, p.type, fn.loc);
            }
        }
    }

    void resolve_impls(PackageUnit& pkg) {
        for (auto& impl : pkg.impls) {
            auto iface_name = lookup_interface(pkg, impl.interface, impl.loc);
            auto type_name = lookup_type(pkg, impl.type_name, impl.loc);
            if (!iface_name || !type_name) {
                continue;
            }
            const InterfaceRecord* iface = interfaces_.at(*iface_name);
            std::string spelled_iface = impl.interface;
            impl.interface = *iface_name;
            impl.type_name = *type_name;

            auto [it, inserted] = impls_.emplace(std::make_pair(impl.interface, impl.type_name), ImplEntry{&impl, &pkg});
            if (!inserted) {
                error("E-DUP-IMPL",
                      "'" + impl.type_name + "' implements '" + impl.interface + "' twice (also in package '" +
                          it->second.package->name + "')",
                      impl.loc);
                continue;
            }
            if (impl.declared_unsafe != iface->declared_unsafe) {
                error("E-IMPL-SAFETY",
                      iface->declared_unsafe
                          ? "implementation of unsafe interface '" + spelled_iface + "' must be marked unsafe"
                          : "implementation of safe interface '" + spelled_iface + "' cannot be marked unsafe",
                      impl.loc);
            }

            std::set<std::string> provided;
            for (const auto& id : impl.methods) {
                auto* fn = const_cast<FunctionRecord*>(pkg.function(id));
                fn->container = impl.type_name;
                fn->interface = impl.interface;
                provided.insert(fn->name);
                for (auto& p : fn->params) {
                    if (p.name == "self") {
                        p.type = TypeRef::concrete(impl.type_name);
                    } else {
                        resolve_type(pkg, p.type, fn->loc);
                    }
                }
                const FunctionRecord* sig = iface->method(fn->name);
                if (sig == nullptr) {
                    error("E-IMPL-MISMATCH",
                          "method '" + fn->name + "' is not a member of interface '" + spelled_iface + "'", fn->loc);
                    continue;
                }
                if (sig->declared_unsafe != fn->declared_unsafe) {
                    error("E-IMPL-MISMATCH",
                          "method '" + fn->name + "' must " + (sig->declared_unsafe ? "" : "not ") +
                              "be declared unsafe to match interface '" + spelled_iface + "'",
                          fn->loc);
                }
                if (fn->is_generic()) {
                    error("E-IMPL-MISMATCH", "implementation method '" + fn->name + "' cannot be generic", fn->loc);
                }
            }
            for (const auto& sig : iface->methods) {
                if (provided.count(sig.name) == 0) {
                    error("E-IMPL-MISMATCH",
                          "implementation of '" + spelled_iface + "' for '" + impl.type_name + "' is missing method '" +
                              sig.name + "'",
                          impl.loc);
                }
            }
        }
    }

    // ---- bodies --------------------------------------------------------

    void resolve_body(const PackageUnit& pkg, FunctionRecord& fn) {
        BodyContext ctx;
        ctx.pkg = &pkg;
        ctx.fn = &fn;
        ctx.scopes.emplace_back();
        for (const auto& p : fn.params) {
            ctx.scopes.back().emplace(p.name, p.type);
        }
        resolve_statements(ctx, fn.body);
    }

    void resolve_statements(BodyContext& ctx, std::vector<Statement>& body) {
        for (auto& stmt : body) {
            if (auto* decl = std::get_if<LocalDecl>(&stmt.node)) {
                resolve_type(*ctx.pkg, decl->type, decl->loc);
                if (!ctx.scopes.back().emplace(decl->name, decl->type).second) {
                    error("E-DUP-VARIABLE", "variable '" + decl->name + "' declared twice in one scope", decl->loc);
                }
            } else if (auto* block = std::get_if<UnsafeBlock>(&stmt.node)) {
                ctx.scopes.emplace_back();
                resolve_statements(ctx, block->body);
                ctx.scopes.pop_back();
            } else if (auto* prim = std::get_if<Primitive>(&stmt.node)) {
                if (prim->kind == UnsafeOpKind::GlobalAccess) {
                    resolve_global(*ctx.pkg, *prim);
                }
            } else if (auto* call = std::get_if<CallSiteRecord>(&stmt.node)) {
                resolve_call(ctx, *call);
            }
        }
    }

    void resolve_global(const PackageUnit& pkg, const Primitive& prim) {
        const GlobalRecord* found = pkg.global(prim.global);
        if (found == nullptr) {
            std::vector<const GlobalRecord*> candidates;
            for (const auto& dep : pkg.dependencies) {
                if (const PackageUnit* p = corpus_.package(dep)) {
                    if (const GlobalRecord* g = p->global(prim.global)) {
                        candidates.push_back(g);
                    }
                }
            }
            if (candidates.size() > 1) {
                error("E-AMBIGUOUS-NAME", "global '" + prim.global + "' is declared by several dependencies", prim.loc);
                return;
            }
            if (candidates.empty()) {
                error("E-UNKNOWN-GLOBAL", "unknown global '" + prim.global + "'", prim.loc);
                return;
            }
            found = candidates.front();
        }
        if (!found->is_mutable) {
            error("E-IMMUTABLE-GLOBAL", "global '" + prim.global + "' is immutable; only mutable globals need unsafe access",
                  prim.loc);
        }
    }

    void resolve_call(BodyContext& ctx, CallSiteRecord& call) {
        for (const auto& arg : call.args) {
            if (ctx.lookup(arg) == nullptr) {
                error("E-UNKNOWN-VAR", "unknown variable '" + arg + "'", call.loc);
            }
        }
        switch (call.form) {
        case CallForm::Indirect:
            resolve_indirect(ctx, call);
            break;
        case CallForm::Method:
            resolve_method_form(ctx, call);
            break;
        case CallForm::Path:
            resolve_path_form(ctx, call);
            break;
        }
    }

    void resolve_indirect(BodyContext& ctx, CallSiteRecord& call) {
        const TypeRef* t = ctx.lookup(call.receiver);
        if (t == nullptr) {
            error("E-UNKNOWN-VAR", "unknown variable '" + call.receiver + "'", call.loc);
            return;
        }
        if (t->kind != TypeKind::FnValue) {
            error("E-NOT-FNPTR", "'" + call.receiver + "' is not a function value", call.loc);
            return;
        }
        call.kind = CallKind::Indirect;
    }

    void resolve_method_form(BodyContext& ctx, CallSiteRecord& call) {
        const TypeRef* t = ctx.lookup(call.receiver);
        if (t == nullptr) {
            error("E-UNKNOWN-VAR", "unknown variable '" + call.receiver + "'", call.loc);
            return;
        }
        switch (t->kind) {
        case TypeKind::Concrete:
            if (types_.count(t->name) != 0) { // unknown types are reported at the declaration
                bind_concrete_method(ctx, call, t->name);
            }
            break;
        case TypeKind::DynInterface: {
            auto found = interfaces_.find(t->name);
            if (found == interfaces_.end()) {
                return;
            }
            const InterfaceRecord* iface = found->second;
            const FunctionRecord* sig = iface->method(call.method);
            if (sig == nullptr) {
                error("E-NO-IMPL", "interface '" + t->name + "' has no method '" + call.method + "'", call.loc);
                return;
            }
            call.kind = CallKind::Dynamic;
            call.interface = iface->id;
            call.target = sig->id;
            call.target_unsafe = sig->declared_unsafe;
            break;
        }
        case TypeKind::GenericVar:
            bind_generic_receiver(ctx, call, t->name);
            break;
        case TypeKind::FnValue:
            error("E-NO-IMPL", "cannot call method '" + call.method + "' on function value '" + call.receiver + "'",
                  call.loc);
            break;
        }
    }

    void bind_generic_receiver(BodyContext& ctx, CallSiteRecord& call, const std::string& var) {
        const GenericParam* g = ctx.generic(var);
        if (g == nullptr || !g->bound) {
            error("E-NO-IMPL", "generic parameter '" + var + "' has no interface bound providing '" + call.method + "'",
                  call.loc);
            return;
        }
        auto it = interfaces_.find(*g->bound);
        if (it == interfaces_.end()) {
            return; // unknown bound already reported
        }
        const FunctionRecord* sig = it->second->method(call.method);
        if (sig == nullptr) {
            error("E-NO-IMPL", "interface '" + *g->bound + "' has no method '" + call.method + "'", call.loc);
            return;
        }
        call.kind = CallKind::GenericReceiver;
        call.generic_var = var;
        call.interface = *g->bound;
        call.target = sig->id;
        call.target_unsafe = sig->declared_unsafe;
    }

    /// Implementations of `type` visible from the caller's package (its
    /// transitive dependency closure) that provide `method`.
    void bind_concrete_method(BodyContext& ctx, CallSiteRecord& call, const std::string& type) {
        const std::set<std::string>& visible = closure_.at(ctx.pkg->name);
        std::vector<const FunctionRecord*> candidates;
        std::vector<std::string> via;
        for (const auto& [key, entry] : impls_) {
            if (key.second != type || visible.count(entry.package->name) == 0) {
                continue;
            }
            for (const auto& id : entry.impl->methods) {
                const FunctionRecord* fn = functions_.at(id);
                if (fn->name == call.method) {
                    candidates.push_back(fn);
                    via.push_back(key.first);
                }
            }
        }
        if (candidates.empty()) {
            error("E-NO-IMPL", "no implementation of method '" + call.method + "' for type '" + type + "'", call.loc);
            return;
        }
        if (candidates.size() > 1) {
            error("E-AMBIGUOUS-METHOD",
                  "method '" + call.method + "' of type '" + type + "' is provided by both '" + via[0] + "' and '" +
                      via[1] + "'",
                  call.loc);
            return;
        }
        call.kind = CallKind::Static;
        call.target = candidates.front()->id;
        call.target_unsafe = candidates.front()->declared_unsafe;
    }

    void resolve_path_form(BodyContext& ctx, CallSiteRecord& call) {
        const PackageUnit& pkg = *ctx.pkg;
        const auto& path = call.path;
        auto no_type_args = [&] {
            if (!call.type_args.empty()) {
                error("E-TYPE-ARITY", "method calls take no type arguments", call.loc);
                return false;
            }
            return true;
        };

        if (path.size() == 1) {
            bind_function(ctx, call, pkg.name + "::" + path[0]);
            return;
        }
        if (path.size() == 2) {
            if (const GenericParam* g = ctx.generic(path[0])) {
                if (no_type_args()) {
                    call.method = path[1];
                    bind_generic_receiver(ctx, call, g->name);
                }
                return;
            }
            if (in_scope(pkg, path[0])) {
                bind_function(ctx, call, path[0] + "::" + path[1]);
                return;
            }
            if (corpus_.package(path[0]) != nullptr) {
                error("E-UNKNOWN-PACKAGE", "package '" + path[0] + "' is not a dependency of '" + pkg.name + "'",
                      call.loc);
                return;
            }
            auto type = lookup_type(pkg, path[0], call.loc);
            if (type && no_type_args()) {
                call.method = path[1];
                bind_concrete_method(ctx, call, *type);
            }
            return;
        }
        // pkg::Type::method
        if (!in_scope(pkg, path[0])) {
            error("E-UNKNOWN-PACKAGE",
                  corpus_.package(path[0]) != nullptr
                      ? "package '" + path[0] + "' is not a dependency of '" + pkg.name + "'"
                      : "unknown package '" + path[0] + "'",
                  call.loc);
            return;
        }
        std::string type = path[0] + "::" + path[1];
        if (types_.count(type) == 0) {
            error("E-UNKNOWN-TYPE", "unknown type '" + type + "'", call.loc);
            return;
        }
        if (no_type_args()) {
            call.method = path[2];
            bind_concrete_method(ctx, call, type);
        }
    }

    void bind_function(BodyContext& ctx, CallSiteRecord& call, const std::string& id) {
        auto it = functions_.find(id);
        if (it == functions_.end() || it->second->is_impl_method()) {
            error("E-UNKNOWN-CALLEE", "unknown function '" + id + "'", call.loc);
            return;
        }
        const FunctionRecord& callee = *it->second;
        if (call.type_args.size() != callee.generics.size()) {
            error("E-TYPE-ARITY",
                  "'" + id + "' expects " + std::to_string(callee.generics.size()) + " type argument(s), got " +
                      std::to_string(call.type_args.size()),
                  call.loc);
            return;
        }
        bool ok = true;
        for (std::size_t i = 0; i < call.type_args.size(); ++i) {
            TypeRef& arg = call.type_args[i];
            if (!resolve_type(*ctx.pkg, arg, call.loc)) {
                ok = false;
                continue;
            }
            const GenericParam& param = callee.generics[i];
            if (param.bound && !satisfies(ctx, arg, *param.bound)) {
                error("E-BOUND",
                      "type argument '" + arg.display() + "' does not implement '" + *param.bound + "' required by '" +
                          param.name + "'",
                      call.loc);
                ok = false;
            }
        }
        if (!ok) {
            return;
        }
        call.kind = callee.is_generic() ? CallKind::Generic : CallKind::Static;
        call.target = callee.id;
        call.target_unsafe = callee.declared_unsafe;
    }

    bool satisfies(const BodyContext& ctx, const TypeRef& arg, const std::string& bound) const {
        switch (arg.kind) {
        case TypeKind::Concrete:
            return impls_.count(std::make_pair(bound, arg.name)) != 0;
        case TypeKind::DynInterface:
            return arg.name == bound;
        case TypeKind::GenericVar: {
            const GenericParam* g = ctx.generic(arg.name);
            return g != nullptr && g->bound && *g->bound == bound;
        }
        case TypeKind::FnValue:
            return false;
        }
        return false;
    }

    Corpus& corpus_;
    std::vector<Diagnostic>& diags_;
    std::set<std::string> types_;
    std::map<std::string, const InterfaceRecord*> interfaces_;
    std::map<std::string, const FunctionRecord*> functions_;
    std::map<std::pair<std::string, std::string>, ImplEntry> impls_;
    std::map<std::string, std::set<std::string>> closure_;
};

} // namespace

ResolveResult resolve_names(Corpus corpus) {
    ResolveResult result;
    Resolver(corpus, result.diagnostics).run();
    result.corpus = std::move(corpus);
    return result;
}

} // namespace unsafety::frontend
