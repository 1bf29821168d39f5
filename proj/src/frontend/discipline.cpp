#include "unsafety/frontend.hpp"

namespace unsafety::frontend {

namespace {

std::string describe(const Statement& stmt) {
    if (const auto* prim = std::get_if<Primitive>(&stmt.node)) {
        switch (prim->kind) {
        case UnsafeOpKind::RawDeref:
            return "dereference of a raw pointer";
        case UnsafeOpKind::InlineAsm:
            return "use of inline assembly";
        case UnsafeOpKind::UnionField:
            return "access to a union field";
        case UnsafeOpKind::GlobalAccess:
            return "access to mutable global '" + prim->global + "'";
        case UnsafeOpKind::UnsafeCall:
            break;
        }
    }
    if (const auto* call = std::get_if<CallSiteRecord>(&stmt.node)) {
        return "call to unsafe function '" + call->target + "'";
    }
    return "unsafe operation";
}

class DisciplineChecker {
public:
    explicit DisciplineChecker(std::vector<Diagnostic>& diags) : diags_(diags) {}

    void check_function(const FunctionRecord& fn) { check(fn.body, fn.declared_unsafe); }

private:
    /// Returns true if `body` contains an unsafe operation at any depth.
    bool check(const std::vector<Statement>& body, bool unsafe_context) {
        bool any = false;
        for (const auto& stmt : body) {
            if (const auto* block = std::get_if<UnsafeBlock>(&stmt.node)) {
                bool inner = check(block->body, true);
                if (!inner) {
                    diags_.push_back(Diagnostic{Severity::Warning, "W-REDUNDANT-UNSAFE",
                                                "unnecessary unsafe block: it contains no unsafe operation",
                                                block->loc});
                }
                any = any || inner;
            } else if (is_unsafe_operation(stmt)) {
                any = true;
                if (!unsafe_context) {
                    const SourceLoc& loc = std::holds_alternative<Primitive>(stmt.node)
                                               ? std::get<Primitive>(stmt.node).loc
                                               : std::get<CallSiteRecord>(stmt.node).loc;
                    diags_.push_back(Diagnostic{Severity::Error, "E-UNSAFE-OP",
                                                describe(stmt) +
                                                    " requires an unsafe block or an unsafe function",
                                                loc});
                }
            }
        }
        return any;
    }

    std::vector<Diagnostic>& diags_;
};

} // namespace

std::vector<Diagnostic> check_unsafe_discipline(const Corpus& corpus) {
    std::vector<Diagnostic> diags;
    DisciplineChecker checker(diags);
    for (const auto& pkg : corpus.packages) {
        for (const auto& fn : pkg.functions) {
            checker.check_function(fn);
        }
    }
    return diags;
}

} // namespace unsafety::frontend
