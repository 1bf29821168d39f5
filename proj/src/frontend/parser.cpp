#include "unsafety/frontend.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>

namespace unsafety::frontend {

namespace {

struct SyntaxError {
    std::string message;
    SourceLoc loc;
};

class Parser {
public:
    Parser(std::vector<Token> tokens, std::string file) : tokens_(std::move(tokens)), file_(std::move(file)) {}

    PackageUnit parse_package_file(std::vector<Diagnostic>& diags) {
        diags_ = &diags;
        PackageUnit pkg;
        pkg.loc = loc();
        expect_keyword("package");
        pkg.name = expect_identifier("package name");
        expect_punct(";");
        package_ = pkg.name;

        std::vector<FunctionRecord> free_functions;
        std::vector<FunctionRecord> impl_methods;
        while (!at_end()) {
            parse_item(pkg, free_functions, impl_methods);
        }
        disambiguate_impl_methods(pkg, impl_methods);
        pkg.functions = std::move(free_functions);
        pkg.functions.insert(pkg.functions.end(), std::make_move_iterator(impl_methods.begin()),
                             std::make_move_iterator(impl_methods.end()));
        return pkg;
    }

private:
    // ---- token helpers -------------------------------------------------

    bool at_end() const { return pos_ >= tokens_.size(); }

    const Token* peek(std::size_t ahead = 0) const {
        return pos_ + ahead < tokens_.size() ? &tokens_[pos_ + ahead] : nullptr;
    }

    SourceLoc loc() const {
        if (const Token* t = peek()) {
            return SourceLoc{file_, t->line, t->column};
        }
        if (!tokens_.empty()) {
            const Token& last = tokens_.back();
            return SourceLoc{file_, last.line, last.column + static_cast<int>(last.lexeme.size())};
        }
        return SourceLoc{file_, 1, 1};
    }

    bool is_keyword(std::string_view kw, std::size_t ahead = 0) const {
        const Token* t = peek(ahead);
        return t != nullptr && t->kind == TokenKind::Keyword && t->lexeme == kw;
    }

    bool is_punct(std::string_view p, std::size_t ahead = 0) const {
        const Token* t = peek(ahead);
        return t != nullptr && t->kind == TokenKind::Punctuation && t->lexeme == p;
    }

    bool is_identifier(std::size_t ahead = 0) const {
        const Token* t = peek(ahead);
        return t != nullptr && t->kind == TokenKind::Identifier;
    }

    [[noreturn]] void fail(const std::string& expected) const {
        std::string found = at_end() ? "end of file" : "'" + peek()->lexeme + "'";
        throw SyntaxError{"expected " + expected + ", found " + found, loc()};
    }

    void expect_keyword(std::string_view kw) {
        if (!is_keyword(kw)) {
            fail("'" + std::string(kw) + "'");
        }
        ++pos_;
    }

    void expect_punct(std::string_view p) {
        if (!is_punct(p)) {
            fail("'" + std::string(p) + "'");
        }
        ++pos_;
    }

    std::string expect_identifier(const std::string& what) {
        if (!is_identifier()) {
            fail(what);
        }
        return tokens_[pos_++].lexeme;
    }

    void error(std::string code, std::string message, SourceLoc where) {
        diags_->push_back(Diagnostic{Severity::Error, std::move(code), std::move(message), std::move(where)});
    }

    // ---- items ---------------------------------------------------------

    void parse_item(PackageUnit& pkg, std::vector<FunctionRecord>& free_functions,
                    std::vector<FunctionRecord>& impl_methods) {
        SourceLoc start = loc();
        if (is_keyword("use")) {
            ++pos_;
            std::string dep = expect_identifier("package name");
            expect_punct(";");
            if (std::find(pkg.dependencies.begin(), pkg.dependencies.end(), dep) != pkg.dependencies.end()) {
                error("E-DUP-USE", "package '" + dep + "' used twice", start);
            } else if (dep == pkg.name) {
                error("E-DEP-CYCLE", "package '" + dep + "' depends on itself", start);
            } else {
                pkg.dependencies.push_back(std::move(dep));
            }
            return;
        }
        if (is_keyword("type")) {
            ++pos_;
            TypeDecl decl{expect_identifier("type name"), start};
            expect_punct(";");
            if (!declared_types_.insert(decl.name).second) {
                error("E-DUP-TYPE", "type '" + decl.name + "' declared twice", start);
            } else {
                pkg.types.push_back(std::move(decl));
            }
            return;
        }
        if (is_keyword("global")) {
            ++pos_;
            GlobalRecord g;
            g.loc = start;
            if (is_keyword("mut")) {
                ++pos_;
                g.is_mutable = true;
            }
            g.name = expect_identifier("global name");
            expect_punct(";");
            if (pkg.global(g.name) != nullptr) {
                error("E-DUP-GLOBAL", "global '" + g.name + "' declared twice", start);
            } else {
                pkg.globals.push_back(std::move(g));
            }
            return;
        }
        if (is_keyword("extern")) {
            ++pos_;
            free_functions.push_back(parse_extern(start));
            check_free_function(free_functions);
            return;
        }

        bool is_unsafe = false;
        if (is_keyword("unsafe")) {
            ++pos_;
            is_unsafe = true;
        }
        if (is_keyword("interface")) {
            parse_interface(pkg, is_unsafe, start);
        } else if (is_keyword("impl")) {
            parse_impl(pkg, is_unsafe, start, impl_methods);
        } else if (is_keyword("fn")) {
            FunctionContext ctx;
            FunctionRecord fn = parse_fn_decl(is_unsafe, start, ctx);
            fn.id = package_ + "::" + fn.name;
            free_functions.push_back(std::move(fn));
            check_free_function(free_functions);
        } else {
            fail(is_unsafe ? "'fn', 'interface' or 'impl'" : "an item");
        }
    }

    void check_free_function(std::vector<FunctionRecord>& fns) {
        const FunctionRecord& added = fns.back();
        for (std::size_t i = 0; i + 1 < fns.size(); ++i) {
            if (fns[i].name == added.name) {
                error("E-DUP-FUNCTION", "function '" + added.name + "' declared twice", added.loc);
                fns.pop_back();
                return;
            }
        }
    }

    FunctionRecord parse_extern(SourceLoc start) {
        const Token* abi = peek();
        if (abi == nullptr || abi->kind != TokenKind::AbiString) {
            fail("an ABI string");
        }
        std::string name = abi->lexeme.substr(1, abi->lexeme.size() - 2);
        if (name != "C" && name != "intrinsic" && name != "native") {
            throw SyntaxError{"unknown ABI " + abi->lexeme + " (expected \"C\", \"intrinsic\" or \"native\")", loc()};
        }
        ++pos_;
        expect_keyword("fn");
        FunctionRecord fn;
        fn.loc = start;
        fn.package = package_;
        fn.name = expect_identifier("function name");
        fn.id = package_ + "::" + fn.name;
        fn.origin = Origin::External;
        fn.abi = std::move(name);
        fn.declared_unsafe = true;
        FunctionContext ctx;
        expect_punct("(");
        parse_params(fn, ctx, /*self_type=*/nullptr);
        expect_punct(")");
        expect_punct(";");
        return fn;
    }

    void parse_interface(PackageUnit& pkg, bool is_unsafe, SourceLoc start) {
        expect_keyword("interface");
        InterfaceRecord iface;
        iface.loc = start;
        iface.declared_unsafe = is_unsafe;
        iface.name = expect_identifier("interface name");
        iface.id = package_ + "::" + iface.name;
        expect_punct("{");
        TypeRef self_type = TypeRef::dyn_interface(iface.name);
        while (!is_punct("}")) {
            SourceLoc sig_start = loc();
            FunctionRecord sig;
            sig.loc = sig_start;
            if (is_keyword("unsafe")) {
                ++pos_;
                sig.declared_unsafe = true;
            }
            expect_keyword("fn");
            sig.package = package_;
            sig.name = expect_identifier("method name");
            sig.container = iface.name;
            sig.id = iface.id + "::" + sig.name;
            sig.origin = Origin::AbstractInterfaceMethod;
            FunctionContext ctx;
            expect_punct("(");
            parse_params(sig, ctx, &self_type);
            expect_punct(")");
            expect_punct(";");
            if (iface.method(sig.name) != nullptr) {
                error("E-DUP-FUNCTION", "method '" + sig.name + "' declared twice in interface '" + iface.name + "'",
                      sig_start);
                continue;
            }
            iface.methods.push_back(std::move(sig));
        }
        expect_punct("}");
        for (const auto& other : pkg.interfaces) {
            if (other.name == iface.name) {
                error("E-DUP-INTERFACE", "interface '" + iface.name + "' declared twice", start);
                return;
            }
        }
        pkg.interfaces.push_back(std::move(iface));
    }

    void parse_impl(PackageUnit& pkg, bool is_unsafe, SourceLoc start, std::vector<FunctionRecord>& impl_methods) {
        expect_keyword("impl");
        ImplRecord impl;
        impl.loc = start;
        impl.declared_unsafe = is_unsafe;
        impl.interface = expect_identifier("interface name");
        expect_keyword("for");
        impl.type_name = expect_identifier("type name");
        expect_punct("{");
        TypeRef self_type = TypeRef::concrete(impl.type_name);
        std::set<std::string> seen;
        while (!is_punct("}")) {
            SourceLoc fn_start = loc();
            bool fn_unsafe = false;
            if (is_keyword("unsafe")) {
                ++pos_;
                fn_unsafe = true;
            }
            FunctionContext ctx;
            ctx.self_type = &self_type;
            FunctionRecord fn = parse_fn_decl(fn_unsafe, fn_start, ctx);
            fn.container = impl.type_name;
            fn.interface = impl.interface;
            fn.id = package_ + "::" + impl.type_name + "::" + fn.name;
            if (!seen.insert(fn.name).second) {
                error("E-DUP-FUNCTION", "method '" + fn.name + "' defined twice in one implementation", fn_start);
                continue;
            }
            impl.methods.push_back(fn.id);
            impl_methods.push_back(std::move(fn));
        }
        expect_punct("}");
        pkg.impls.push_back(std::move(impl));
    }

    /// Two implementations in one package may give the same type methods of
    /// the same name; those get "pkg::<Type as Iface>::name" ids instead.
    void disambiguate_impl_methods(PackageUnit& pkg, std::vector<FunctionRecord>& impl_methods) {
        std::map<std::string, int> uses;
        for (const auto& fn : impl_methods) {
            ++uses[fn.id];
        }
        for (auto& fn : impl_methods) {
            if (uses[fn.id] < 2) {
                continue;
            }
            std::string fresh = package_ + "::<" + fn.container + " as " + fn.interface + ">::" + fn.name;
            for (auto& impl : pkg.impls) {
                if (impl.interface == fn.interface && impl.type_name == fn.container) {
                    std::replace(impl.methods.begin(), impl.methods.end(), fn.id, fresh);
                }
            }
            fn.id = std::move(fresh);
        }
    }

    // ---- functions -----------------------------------------------------

    struct FunctionContext {
        const TypeRef* self_type = nullptr;
        std::set<std::string> generics;
        bool declared_unsafe = false;
    };

    FunctionRecord parse_fn_decl(bool is_unsafe, SourceLoc start, FunctionContext& ctx) {
        expect_keyword("fn");
        FunctionRecord fn;
        fn.loc = start;
        fn.package = package_;
        fn.declared_unsafe = is_unsafe;
        ctx.declared_unsafe = is_unsafe;
        fn.name = expect_identifier("function name");
        if (is_punct("<")) {
            ++pos_;
            do {
                SourceLoc gloc = loc();
                GenericParam gp;
                gp.name = expect_identifier("generic parameter");
                if (is_punct(":")) {
                    ++pos_;
                    gp.bound = expect_identifier("interface bound");
                }
                if (!ctx.generics.insert(gp.name).second) {
                    error("E-DUP-GENERIC", "generic parameter '" + gp.name + "' declared twice", gloc);
                } else {
                    fn.generics.push_back(std::move(gp));
                }
            } while (is_punct(",") && (++pos_, true));
            expect_punct(">");
        }
        expect_punct("(");
        parse_params(fn, ctx, ctx.self_type);
        expect_punct(")");
        fn.body = parse_block(ctx, 0);
        return fn;
    }

    void parse_params(FunctionRecord& fn, FunctionContext& ctx, const TypeRef* self_type) {
        if (is_punct(")")) {
            return;
        }
        std::set<std::string> names;
        do {
            SourceLoc ploc = loc();
            Param p;
            if (is_keyword("self")) {
                if (self_type == nullptr) {
                    throw SyntaxError{"'self' parameter outside an interface or implementation", ploc};
                }
                ++pos_;
                p.name = "self";
                p.type = *self_type;
            } else {
                p.name = expect_identifier("parameter name");
                expect_punct(":");
                p.type = parse_type(ctx);
            }
            if (!names.insert(p.name).second) {
                error("E-DUP-VARIABLE", "parameter '" + p.name + "' declared twice", ploc);
            }
            fn.params.push_back(std::move(p));
        } while (is_punct(",") && (++pos_, true));
    }

    TypeRef parse_type(const FunctionContext& ctx) {
        if (is_keyword("fnptr")) {
            ++pos_;
            return TypeRef::fn_value();
        }
        if (is_keyword("dyn")) {
            ++pos_;
            return TypeRef::dyn_interface(expect_identifier("interface name"));
        }
        std::string name = expect_identifier("a type");
        if (ctx.generics.count(name) != 0) {
            return TypeRef::generic_var(std::move(name));
        }
        return TypeRef::concrete(std::move(name));
    }

    std::vector<Statement> parse_block(FunctionContext& ctx, int depth) {
        expect_punct("{");
        std::vector<Statement> body;
        while (!is_punct("}")) {
            if (at_end()) {
                fail("'}'");
            }
            body.push_back(parse_statement(ctx, depth));
        }
        expect_punct("}");
        return body;
    }

    Statement parse_statement(FunctionContext& ctx, int depth) {
        SourceLoc start = loc();
        if (is_keyword("let")) {
            ++pos_;
            LocalDecl decl;
            decl.loc = start;
            decl.name = expect_identifier("variable name");
            expect_punct(":");
            decl.type = parse_type(ctx);
            expect_punct(";");
            return Statement{std::move(decl)};
        }
        if (is_keyword("unsafe")) {
            ++pos_;
            UnsafeBlock block;
            block.loc = start;
            block.body = parse_block(ctx, depth + 1);
            return Statement{std::move(block)};
        }
        if (const Token* t = peek(); t != nullptr && t->kind == TokenKind::Keyword && t->lexeme[0] == '@') {
            ++pos_;
            Primitive prim;
            prim.loc = start;
            if (t->lexeme == "@deref_ptr") {
                prim.kind = UnsafeOpKind::RawDeref;
            } else if (t->lexeme == "@asm") {
                prim.kind = UnsafeOpKind::InlineAsm;
            } else if (t->lexeme == "@union_field") {
                prim.kind = UnsafeOpKind::UnionField;
            } else {
                prim.kind = UnsafeOpKind::GlobalAccess;
                prim.write = t->lexeme == "@write_global";
                prim.global = expect_identifier("global name");
            }
            expect_punct(";");
            return Statement{std::move(prim)};
        }

        CallSiteRecord call;
        call.loc = start;
        call.in_unsafe_context = ctx.declared_unsafe || depth > 0;
        if (is_keyword("indirect")) {
            ++pos_;
            call.form = CallForm::Indirect;
            call.receiver = expect_identifier("function value variable");
        } else if ((is_identifier() || is_keyword("self")) && is_punct(".", 1)) {
            call.form = CallForm::Method;
            call.receiver = tokens_[pos_].lexeme;
            pos_ += 2;
            call.method = expect_identifier("method name");
            parse_args(call);
        } else if (is_identifier()) {
            call.form = CallForm::Path;
            call.path.push_back(tokens_[pos_++].lexeme);
            while (is_punct("::") && is_identifier(1)) {
                if (call.path.size() == 3) {
                    fail("'(' (paths have at most three segments)");
                }
                ++pos_;
                call.path.push_back(tokens_[pos_++].lexeme);
            }
            if (is_punct("::") && is_punct("<", 1)) {
                pos_ += 2;
                do {
                    call.type_args.push_back(parse_type(ctx));
                } while (is_punct(",") && (++pos_, true));
                expect_punct(">");
            }
            parse_args(call);
        } else {
            fail("a statement");
        }
        expect_punct(";");
        return Statement{std::move(call)};
    }

    void parse_args(CallSiteRecord& call) {
        expect_punct("(");
        if (!is_punct(")")) {
            do {
                if (is_keyword("self")) {
                    ++pos_;
                    call.args.emplace_back("self");
                } else {
                    call.args.push_back(expect_identifier("an argument"));
                }
            } while (is_punct(",") && (++pos_, true));
        }
        expect_punct(")");
    }

    std::vector<Token> tokens_;
    std::string file_;
    std::size_t pos_ = 0;
    std::string package_;
    std::set<std::string> declared_types_;
    std::vector<Diagnostic>* diags_ = nullptr;
};

void check_dependency_cycles(const Corpus& corpus, std::vector<Diagnostic>& diags) {
    enum class Mark { None, Active, Done };
    std::map<std::string, Mark> marks;
    std::vector<std::string> stack;
    std::set<std::string> reported;

    std::function<void(const PackageUnit&)> visit = [&](const PackageUnit& pkg) {
        marks[pkg.name] = Mark::Active;
        stack.push_back(pkg.name);
        for (const auto& dep_name : pkg.dependencies) {
            const PackageUnit* dep = corpus.package(dep_name);
            if (dep == nullptr) {
                continue;
            }
            Mark m = marks[dep_name];
            if (m == Mark::Active) {
                auto begin = std::find(stack.begin(), stack.end(), dep_name);
                std::string cycle;
                for (auto it = begin; it != stack.end(); ++it) {
                    cycle += *it + " -> ";
                }
                cycle += dep_name;
                if (reported.insert(cycle).second) {
                    diags.push_back(Diagnostic{Severity::Error, "E-DEP-CYCLE", "dependency cycle: " + cycle, pkg.loc});
                }
            } else if (m == Mark::None) {
                visit(*dep);
            }
        }
        stack.pop_back();
        marks[pkg.name] = Mark::Done;
    };

    for (const auto& pkg : corpus.packages) {
        if (marks[pkg.name] == Mark::None) {
            visit(pkg);
        }
    }
}

} // namespace

ParseResult parse_corpus(std::span<const SourceFile> files) {
    ParseResult result;
    std::vector<const SourceFile*> ordered;
    for (const auto& f : files) {
        ordered.push_back(&f);
    }
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const SourceFile* a, const SourceFile* b) { return a->path < b->path; });

    std::map<std::string, PackageUnit> packages;
    for (const SourceFile* file : ordered) {
        LexResult lexed = tokenize(file->text, file->path);
        if (!lexed.diagnostics.empty()) {
            result.diagnostics.insert(result.diagnostics.end(), lexed.diagnostics.begin(), lexed.diagnostics.end());
            continue;
        }
        std::vector<Diagnostic> diags;
        try {
            Parser parser(std::move(lexed.tokens), file->path);
            PackageUnit pkg = parser.parse_package_file(diags);
            result.diagnostics.insert(result.diagnostics.end(), diags.begin(), diags.end());
            if (packages.count(pkg.name) != 0) {
                result.diagnostics.push_back(Diagnostic{Severity::Error, "E-DUP-PACKAGE",
                                                        "package '" + pkg.name + "' declared twice (first in " +
                                                            packages[pkg.name].loc.file + ")",
                                                        pkg.loc});
                continue;
            }
            std::string name = pkg.name;
            packages.emplace(std::move(name), std::move(pkg));
        } catch (const SyntaxError& e) {
            result.diagnostics.insert(result.diagnostics.end(), diags.begin(), diags.end());
            result.diagnostics.push_back(Diagnostic{Severity::Error, "E-SYNTAX", e.message, e.loc});
        }
    }
    for (auto& [name, pkg] : packages) {
        result.corpus.packages.push_back(std::move(pkg));
    }
    check_dependency_cycles(result.corpus, result.diagnostics);
    return result;
}

LoadResult load_corpus(std::span<const SourceFile> files) {
    ParseResult parsed = parse_corpus(files);
    LoadResult out;
    out.diagnostics = std::move(parsed.diagnostics);
    if (has_errors(out.diagnostics)) {
        out.corpus = std::move(parsed.corpus);
        return out;
    }
    ResolveResult resolved = resolve_names(std::move(parsed.corpus));
    out.diagnostics.insert(out.diagnostics.end(), resolved.diagnostics.begin(), resolved.diagnostics.end());
    out.corpus = std::move(resolved.corpus);
    if (has_errors(out.diagnostics)) {
        return out;
    }
    auto discipline = check_unsafe_discipline(out.corpus);
    out.diagnostics.insert(out.diagnostics.end(), discipline.begin(), discipline.end());
    return out;
}

} // namespace unsafety::frontend
