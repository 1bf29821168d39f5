#include "unsafety/frontend.hpp"

#include <sstream>

namespace unsafety::frontend {

namespace {

void print_type(std::ostream& os, const TypeRef& t) {
    switch (t.kind) {
    case TypeKind::Concrete:
    case TypeKind::GenericVar:
        os << t.name;
        break;
    case TypeKind::DynInterface:
        os << "dyn " << t.name;
        break;
    case TypeKind::FnValue:
        os << "fnptr";
        break;
    }
}

void print_params(std::ostream& os, const std::vector<Param>& params) {
    os << '(';
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (i != 0) {
            os << ", ";
        }
        if (params[i].name == "self") {
            os << "self";
        } else {
            os << params[i].name << ": ";
            print_type(os, params[i].type);
        }
    }
    os << ')';
}

void print_args(std::ostream& os, const std::vector<std::string>& args) {
    os << '(';
    for (std::size_t i = 0; i < args.size(); ++i) {
        os << (i != 0 ? ", " : "") << args[i];
    }
    os << ')';
}

void print_body(std::ostream& os, const std::vector<Statement>& body, int indent);

void print_statement(std::ostream& os, const Statement& stmt, int indent) {
    std::string pad(static_cast<std::size_t>(indent) * 4, ' ');
    if (const auto* decl = std::get_if<LocalDecl>(&stmt.node)) {
        os << pad << "let " << decl->name << ": ";
        print_type(os, decl->type);
        os << ";\n";
    } else if (const auto* block = std::get_if<UnsafeBlock>(&stmt.node)) {
        os << pad << "unsafe ";
        print_body(os, block->body, indent);
        os << '\n';
    } else if (const auto* prim = std::get_if<Primitive>(&stmt.node)) {
        os << pad;
        switch (prim->kind) {
        case UnsafeOpKind::RawDeref:
            os << "@deref_ptr";
            break;
        case UnsafeOpKind::InlineAsm:
            os << "@asm";
            break;
        case UnsafeOpKind::UnionField:
            os << "@union_field";
            break;
        case UnsafeOpKind::GlobalAccess:
            os << (prim->write ? "@write_global " : "@read_global ") << prim->global;
            break;
        case UnsafeOpKind::UnsafeCall:
            break;
        }
        os << ";\n";
    } else if (const auto* call = std::get_if<CallSiteRecord>(&stmt.node)) {
        os << pad;
        switch (call->form) {
        case CallForm::Indirect:
            os << "indirect " << call->receiver;
            break;
        case CallForm::Method:
            os << call->receiver << '.' << call->method;
            print_args(os, call->args);
            break;
        case CallForm::Path:
            for (std::size_t i = 0; i < call->path.size(); ++i) {
                os << (i != 0 ? "::" : "") << call->path[i];
            }
            if (!call->type_args.empty()) {
                os << "::<";
                for (std::size_t i = 0; i < call->type_args.size(); ++i) {
                    if (i != 0) {
                        os << ", ";
                    }
                    print_type(os, call->type_args[i]);
                }
                os << '>';
            }
            print_args(os, call->args);
            break;
        }
        os << ";\n";
    }
}

void print_body(std::ostream& os, const std::vector<Statement>& body, int indent) {
    if (body.empty()) {
        os << "{ }";
        return;
    }
    os << "{\n";
    for (const auto& stmt : body) {
        print_statement(os, stmt, indent + 1);
    }
    os << std::string(static_cast<std::size_t>(indent) * 4, ' ') << '}';
}

void print_fn(std::ostream& os, const FunctionRecord& fn, int indent) {
    std::string pad(static_cast<std::size_t>(indent) * 4, ' ');
    os << pad;
    if (fn.origin == Origin::External) {
        os << "extern \"" << fn.abi << "\" fn " << fn.name;
        print_params(os, fn.params);
        os << ";\n";
        return;
    }
    if (fn.declared_unsafe) {
        os << "unsafe ";
    }
    os << "fn " << fn.name;
    if (fn.is_generic()) {
        os << '<';
        for (std::size_t i = 0; i < fn.generics.size(); ++i) {
            if (i != 0) {
                os << ", ";
            }
            os << fn.generics[i].name;
            if (fn.generics[i].bound) {
                os << ": " << *fn.generics[i].bound;
            }
        }
        os << '>';
    }
    print_params(os, fn.params);
    if (fn.origin == Origin::AbstractInterfaceMethod) {
        os << ";\n";
        return;
    }
    os << ' ';
    print_body(os, fn.body, indent);
    os << '\n';
}

} // namespace

std::string print_package(const PackageUnit& pkg) {
    std::ostringstream os;
    os << "package " << pkg.name << ";\n";
    for (const auto& dep : pkg.dependencies) {
        os << "use " << dep << ";\n";
    }
    for (const auto& t : pkg.types) {
        os << "type " << t.name << ";\n";
    }
    for (const auto& g : pkg.globals) {
        os << "global " << (g.is_mutable ? "mut " : "") << g.name << ";\n";
    }
    for (const auto& iface : pkg.interfaces) {
        os << (iface.declared_unsafe ? "unsafe " : "") << "interface " << iface.name << " {\n";
        for (const auto& sig : iface.methods) {
            print_fn(os, sig, 1);
        }
        os << "}\n";
    }
    for (const auto& fn : pkg.functions) {
        if (!fn.is_impl_method()) {
            print_fn(os, fn, 0);
        }
    }
    for (const auto& impl : pkg.impls) {
        os << (impl.declared_unsafe ? "unsafe " : "") << "impl " << impl.interface << " for " << impl.type_name
           << " {\n";
        for (const auto& id : impl.methods) {
            if (const FunctionRecord* fn = pkg.function(id)) {
                print_fn(os, *fn, 1);
            }
        }
        os << "}\n";
    }
    return os.str();
}

} // namespace unsafety::frontend
