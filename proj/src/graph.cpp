#include "unsafety/graph.hpp"

#include <deque>

namespace unsafety::graph {

std::string_view to_string(NodeKind kind) {
    switch (kind) {
    case NodeKind::Ground:
        return "ground";
    case NodeKind::Ungrounded:
        return "ungrounded";
    case NodeKind::Abstract:
        return "abstract";
    case NodeKind::Unresolved:
        return "unresolved";
    }
    return "?";
}

std::string_view to_string(TrustTag tag) {
    switch (tag) {
    case TrustTag::None:
        return "none";
    case TrustTag::SafeLeaf:
        return "safe-leaf";
    case TrustTag::UnsafeLeaf:
        return "unsafe-leaf";
    }
    return "?";
}

NodeKey dynamic_key(std::string_view interface, std::string_view method) {
    return NodeKey{"abstract(" + std::string(interface) + "::" + std::string(method) + ")"};
}

NodeKey receiver_key(const NodeKey& caller, std::string_view generic_var, std::string_view method) {
    return NodeKey{"abstract(" + caller.value + ": " + std::string(generic_var) + "." + std::string(method) + ")"};
}

NodeKey indirect_key(std::string_view function, const SourceLoc& loc) {
    return NodeKey{"indirect(" + std::string(function) + "@" + std::to_string(loc.line) + ":" +
                   std::to_string(loc.column) + ")"};
}

NodeKey unresolved_key(const NodeKey& instantiation) {
    return NodeKey{"unresolved(" + instantiation.value + ")"};
}

// ---------------------------------------------------------------------------
// DualCallGraph

const GraphNode& DualCallGraph::add_node(GraphNode node) {
    auto [it, inserted] = nodes_.try_emplace(node.key, node);
    if (!inserted) {
        it->second.truncated = it->second.truncated || node.truncated;
    }
    return it->second;
}

void DualCallGraph::add_edge(const NodeKey& from, const NodeKey& to, bool external) {
    auto caller = nodes_.find(from);
    if (caller == nodes_.end() || nodes_.count(to) == 0) {
        throw GraphError("edge " + from.value + " -> " + to.value + " references a missing node");
    }
    if (caller->second.kind == NodeKind::Abstract || caller->second.kind == NodeKind::Unresolved) {
        throw GraphError("abstract node " + from.value + " cannot have outgoing edges");
    }
    edges_[from][to] = external;
}

const GraphNode* DualCallGraph::node(const NodeKey& key) const {
    auto it = nodes_.find(key);
    return it == nodes_.end() ? nullptr : &it->second;
}

std::vector<GraphEdge> DualCallGraph::edges() const {
    std::vector<GraphEdge> out;
    for (const auto& [from, targets] : edges_) {
        for (const auto& [to, external] : targets) {
            out.push_back(GraphEdge{from, to, external});
        }
    }
    return out;
}

std::size_t DualCallGraph::edge_count() const {
    std::size_t n = 0;
    for (const auto& [from, targets] : edges_) {
        n += targets.size();
    }
    return n;
}

const std::map<NodeKey, bool>& DualCallGraph::successors(const NodeKey& key) const {
    static const std::map<NodeKey, bool> kNone;
    auto it = edges_.find(key);
    return it == edges_.end() ? kNone : it->second;
}

std::vector<NodeKey> DualCallGraph::seed_extension() const {
    std::vector<NodeKey> out;
    for (const auto& [key, node] : nodes_) {
        if (node.kind == NodeKind::Abstract || node.kind == NodeKind::Unresolved) {
            out.push_back(key);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Method and generic resolution

MethodTarget resolve_method_call(const CorpusIndex& index, const TypeRef& receiver, std::string_view method,
                                 std::string_view interface) {
    switch (receiver.kind) {
    case TypeKind::DynInterface: {
        const InterfaceRecord* iface = index.interface(receiver.name);
        if (iface == nullptr || iface->method(method) == nullptr) {
            throw NoImplementationError("interface '" + receiver.name + "' has no method '" + std::string(method) + "'");
        }
        return MethodTarget{true, nullptr, receiver.name, std::string(method)};
    }
    case TypeKind::Concrete: {
        std::vector<const FunctionRecord*> candidates;
        if (!interface.empty()) {
            if (const FunctionRecord* fn = index.impl_method(interface, receiver.name, method)) {
                candidates.push_back(fn);
            }
        } else {
            candidates = index.methods_of(receiver.name, method);
        }
        if (candidates.size() != 1) {
            throw NoImplementationError(
                (candidates.empty() ? "no implementation of '" : "several implementations of '") +
                std::string(method) + "' for '" + receiver.name + "'");
        }
        return MethodTarget{false, candidates.front(), {}, std::string(method)};
    }
    case TypeKind::GenericVar:
    case TypeKind::FnValue:
        break;
    }
    throw NoImplementationError("receiver of type '" + receiver.display() + "' has no method '" + std::string(method) +
                                "'");
}

Instantiation instantiate_generic_call(const CorpusIndex& index, const CallSiteRecord& call,
                                       const Substitution& caller, int depth, int depth_cap,
                                       const DualCallGraph* memo) {
    Instantiation out;
    if (call.kind == CallKind::GenericReceiver) {
        const TypeRef* bound = caller.find(call.generic_var);
        if (bound == nullptr || !bound->is_ground()) {
            out.status = Instantiation::Status::Unbound;
            return out;
        }
        std::string method = call.target.substr(call.target.rfind("::") + 2);
        MethodTarget target = resolve_method_call(index, *bound, method, call.interface);
        if (target.dynamic) {
            out.status = Instantiation::Status::Dynamic;
            out.interface = target.interface;
            out.method = target.method;
            return out;
        }
        // Implementation methods are never generic.
        out.status = Instantiation::Status::Ground;
        out.callee = target.function;
        out.key = NodeKey{target.function->id};
        return out;
    }
    if (call.kind != CallKind::Generic) {
        throw GraphError("instantiate_generic_call on a " + std::string(to_string(call.kind)) + " call");
    }

    const FunctionRecord* callee = index.function(call.target);
    if (callee == nullptr || callee->generics.size() != call.type_args.size()) {
        throw ArityMismatchError("call to '" + call.target + "' does not match its generic parameters");
    }
    out.callee = callee;
    Substitution s;
    for (std::size_t i = 0; i < callee->generics.size(); ++i) {
        s.bind(callee->generics[i].name, apply_substitution(call.type_args[i], caller));
    }
    if (!s.is_ground()) {
        out.status = Instantiation::Status::Ungrounded;
        out.key = ungrounded_key(*callee);
        return out;
    }
    out.substitution = std::move(s);
    out.key = make_node_key(*callee, out.substitution);
    if ((memo != nullptr && memo->contains(out.key)) || depth + 1 <= depth_cap) {
        out.status = Instantiation::Status::Ground;
    } else {
        out.status = Instantiation::Status::Unresolved;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Construction

namespace {

class PackageGraphBuilder {
public:
    PackageGraphBuilder(const CorpusIndex& index, const PackageUnit& pkg, const BuildOptions& options)
        : index_(index), pkg_(pkg), options_(options) {
        graph_.meta = GraphMeta{options.depth_cap, options.trusted, options.early_termination};
        graph_.packages.insert(pkg.name);
    }

    DualCallGraph build() {
        bool trusted = is_trusted(pkg_.name);
        for (const auto& fn : pkg_.functions) {
            if (fn.is_generic()) {
                add_function_node(fn, ungrounded_key(fn), NodeKind::Ungrounded, {});
            } else {
                add_function_node(fn, NodeKey{fn.id}, NodeKind::Ground, {});
            }
            if (!trusted && fn.origin == Origin::Native) {
                queue_.push_back(WorkItem{representative_key(fn), &fn, {}, fn.is_generic(), 0});
            }
        }
        while (!queue_.empty()) {
            WorkItem item = std::move(queue_.front());
            queue_.pop_front();
            process(item);
        }
        return std::move(graph_);
    }

private:
    struct WorkItem {
        NodeKey key;
        const FunctionRecord* fn = nullptr;
        Substitution substitution;
        bool ungrounded = false;
        int depth = 0;
    };

    bool is_trusted(const std::string& package) const { return options_.trusted.count(package) != 0; }

    const GraphNode& add_function_node(const FunctionRecord& fn, NodeKey key, NodeKind kind, Substitution s) {
        GraphNode node;
        node.key = std::move(key);
        node.kind = kind;
        node.function = fn.id;
        node.package = fn.package;
        node.substitution = std::move(s);
        if (is_trusted(fn.package)) {
            node.trust = fn.declared_unsafe ? TrustTag::UnsafeLeaf : TrustTag::SafeLeaf;
        }
        return graph_.add_node(std::move(node));
    }

    const GraphNode& add_graph_only_node(NodeKey key, NodeKind kind, std::string function, Substitution s = {}) {
        GraphNode node;
        node.key = std::move(key);
        node.kind = kind;
        node.function = std::move(function);
        node.substitution = std::move(s);
        return graph_.add_node(std::move(node));
    }

    void link(const WorkItem& caller, const GraphNode& callee) {
        bool external = !callee.package.empty() && callee.package != caller.fn->package;
        graph_.add_edge(caller.key, callee.key, external);
    }

    /// With early termination, statements from the first unsafe block on
    /// add no edges. They are still scanned for generic instantiations so
    /// that depth-cap outcomes, and hence verdicts, match the untruncated
    /// graph.
    void process(const WorkItem& item) {
        bool truncated = false;
        for (const auto& stmt : item.fn->body) {
            if (options_.early_termination && !truncated && std::holds_alternative<UnsafeBlock>(stmt.node)) {
                truncated = true;
                GraphNode mark = *graph_.node(item.key);
                mark.truncated = true;
                graph_.add_node(std::move(mark));
            }
            visit(item, stmt, truncated);
        }
    }

    void visit(const WorkItem& item, const Statement& stmt, bool discover_only) {
        if (const auto* block = std::get_if<UnsafeBlock>(&stmt.node)) {
            for (const auto& inner : block->body) {
                visit(item, inner, discover_only);
            }
        } else if (const auto* call = std::get_if<CallSiteRecord>(&stmt.node)) {
            if (discover_only) {
                discover(item, *call);
            } else {
                handle_call(item, *call);
            }
        }
    }

    void discover(const WorkItem& item, const CallSiteRecord& call) {
        if (call.kind != CallKind::Generic && call.kind != CallKind::GenericReceiver) {
            return;
        }
        Instantiation inst =
            instantiate_generic_call(index_, call, item.substitution, item.depth, options_.depth_cap, &graph_);
        if (inst.status == Instantiation::Status::Ground && !graph_.contains(inst.key)) {
            add_function_node(*inst.callee, inst.key, NodeKind::Ground, inst.substitution);
            if (inst.callee->is_generic() && !is_trusted(inst.callee->package)) {
                queue_.push_back(WorkItem{inst.key, inst.callee, inst.substitution, false, item.depth + 1});
            }
        }
    }

    void handle_call(const WorkItem& item, const CallSiteRecord& call) {
        switch (call.kind) {
        case CallKind::Static: {
            const FunctionRecord* callee = index_.function(call.target);
            link(item, add_function_node(*callee, NodeKey{callee->id}, NodeKind::Ground, {}));
            break;
        }
        case CallKind::Dynamic: {
            std::string method = call.target.substr(call.target.rfind("::") + 2);
            link(item, add_graph_only_node(dynamic_key(call.interface, method), NodeKind::Abstract, call.target));
            break;
        }
        case CallKind::Indirect:
            link(item, add_graph_only_node(indirect_key(item.fn->id, call.loc), NodeKind::Unresolved, item.fn->id));
            break;
        case CallKind::Generic:
        case CallKind::GenericReceiver:
            handle_instantiation(item, call);
            break;
        case CallKind::Unresolved:
            throw GraphError("unresolved call site at " + to_string(call.loc));
        }
    }

    void handle_instantiation(const WorkItem& item, const CallSiteRecord& call) {
        Instantiation inst =
            instantiate_generic_call(index_, call, item.substitution, item.depth, options_.depth_cap, &graph_);
        switch (inst.status) {
        case Instantiation::Status::Unbound: {
            std::string method = call.target.substr(call.target.rfind("::") + 2);
            link(item, add_graph_only_node(receiver_key(item.key, call.generic_var, method), NodeKind::Abstract,
                                           item.fn->id));
            break;
        }
        case Instantiation::Status::Dynamic: {
            const InterfaceRecord* iface = index_.interface(inst.interface);
            std::string sig = iface != nullptr ? iface->id + "::" + inst.method : inst.method;
            link(item, add_graph_only_node(dynamic_key(inst.interface, inst.method), NodeKind::Abstract, sig));
            break;
        }
        case Instantiation::Status::Ungrounded:
            link(item, add_function_node(*inst.callee, inst.key, NodeKind::Ungrounded, {}));
            break;
        case Instantiation::Status::Unresolved:
            link(item, add_graph_only_node(unresolved_key(inst.key), NodeKind::Unresolved, inst.callee->id,
                                           inst.substitution));
            break;
        case Instantiation::Status::Ground: {
            bool fresh = !graph_.contains(inst.key);
            const GraphNode& node = add_function_node(*inst.callee, inst.key, NodeKind::Ground, inst.substitution);
            link(item, node);
            // Non-generic targets are roots of their own package's graph.
            if (fresh && inst.callee->is_generic() && !is_trusted(inst.callee->package)) {
                queue_.push_back(WorkItem{inst.key, inst.callee, inst.substitution, false, item.depth + 1});
            }
            break;
        }
        }
    }

    const CorpusIndex& index_;
    const PackageUnit& pkg_;
    const BuildOptions& options_;
    DualCallGraph graph_;
    std::deque<WorkItem> queue_;
};

} // namespace

DualCallGraph build_package_graph(const CorpusIndex& index, const std::string& package, const BuildOptions& options) {
    const PackageUnit* pkg = index.package(package);
    if (pkg == nullptr) {
        throw GraphError("unknown package '" + package + "'");
    }
    if (options.depth_cap < 1) {
        throw GraphError("depth cap must be at least 1");
    }
    return PackageGraphBuilder(index, *pkg, options).build();
}

DualCallGraph build_extended_call_graph(const Corpus& corpus, const BuildOptions& options) {
    CorpusIndex index(corpus);
    std::vector<DualCallGraph> graphs;
    graphs.reserve(corpus.packages.size());
    for (const auto& pkg : corpus.packages) {
        graphs.push_back(build_package_graph(index, pkg.name, options));
    }
    DualCallGraph merged = merge_package_graphs(graphs);
    merged.meta = GraphMeta{options.depth_cap, options.trusted, options.early_termination};
    return merged;
}

DualCallGraph merge_package_graphs(std::span<const DualCallGraph> graphs) {
    DualCallGraph merged;
    if (!graphs.empty()) {
        merged.meta = graphs.front().meta;
    }
    for (const auto& g : graphs) {
        merged.packages.insert(g.packages.begin(), g.packages.end());
        for (const auto& [key, node] : g.nodes()) {
            merged.add_node(node);
        }
    }
    for (const auto& g : graphs) {
        for (const auto& edge : g.edges()) {
            merged.add_edge(edge.from, edge.to, edge.external);
        }
    }
    for (const auto& [key, node] : merged.nodes()) {
        if (!node.package.empty() && merged.packages.count(node.package) == 0) {
            throw DanglingReferenceError("node " + key.value + " refers to package '" + node.package +
                                         "', which is not part of the merge");
        }
    }
    return merged;
}

Adjacency adjacency(const DualCallGraph& graph) {
    Adjacency adj;
    for (const auto& [key, node] : graph.nodes()) {
        adj[key];
    }
    for (const auto& edge : graph.edges()) {
        adj[edge.from].insert(edge.to);
    }
    return adj;
}

Adjacency reverse_graph(const Adjacency& adj) {
    Adjacency rev;
    for (const auto& [from, targets] : adj) {
        rev[from];
        for (const auto& to : targets) {
            rev[to].insert(from);
        }
    }
    return rev;
}

Adjacency reverse_graph(const DualCallGraph& graph) {
    return reverse_graph(adjacency(graph));
}

std::map<NodeKey, bool> early_termination_mark(const DualCallGraph& graph) {
    std::map<NodeKey, bool> out;
    for (const auto& [key, node] : graph.nodes()) {
        out.emplace(key, node.truncated);
    }
    return out;
}

} // namespace unsafety::graph
