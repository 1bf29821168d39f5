#pragma once

/// @file graph.hpp
/// @brief Extended call graph: nodes pair a function with a ground
/// substitution of its generic parameters.
///
/// Calls whose target cannot be known statically (dynamic dispatch, calls
/// through function values, generic receivers of an un-grounded function,
/// instantiations beyond the depth cap) end in abstract or unresolved nodes
/// without outgoing edges. The conservative and optimistic variants share
/// this one graph; they differ only in how the analysis seeds those nodes.

#include "unsafety/model.hpp"

#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace unsafety::graph {

enum class NodeKind { Ground, Ungrounded, Abstract, Unresolved };

std::string_view to_string(NodeKind kind);

/// Calls into trusted packages end at leaves tagged by the callee's
/// declared safety.
enum class TrustTag { None, SafeLeaf, UnsafeLeaf };

std::string_view to_string(TrustTag tag);

struct GraphNode {
    NodeKey key;
    NodeKind kind = NodeKind::Ground;
    std::string function; ///< function id; interface method id for dynamic abstract nodes
    std::string package;  ///< owning package of function nodes, empty for abstract/unresolved
    Substitution substitution;
    TrustTag trust = TrustTag::None;
    bool truncated = false; ///< early termination stopped traversal of this body

    friend bool operator==(const GraphNode&, const GraphNode&) = default;
};

struct GraphEdge {
    NodeKey from;
    NodeKey to;
    bool external = false; ///< caller and callee belong to different packages

    friend bool operator==(const GraphEdge&, const GraphEdge&) = default;
};

struct GraphMeta {
    int depth_cap = 8;
    std::set<std::string> trusted;
    bool early_termination = false;

    friend bool operator==(const GraphMeta&, const GraphMeta&) = default;
};

class GraphError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DanglingReferenceError : public GraphError {
public:
    using GraphError::GraphError;
};

class NoImplementationError : public GraphError {
public:
    using GraphError::GraphError;
};

class DualCallGraph {
public:
    /// Inserts `node` unless its key is present; truncation flags of equal
    /// keys are OR-ed. Returns the stored node.
    const GraphNode& add_node(GraphNode node);

    /// Both endpoints must exist; abstract and unresolved nodes cannot be
    /// callers. Throws GraphError otherwise.
    void add_edge(const NodeKey& from, const NodeKey& to, bool external = false);

    bool contains(const NodeKey& key) const { return nodes_.count(key) != 0; }
    const GraphNode* node(const NodeKey& key) const;
    const std::map<NodeKey, GraphNode>& nodes() const { return nodes_; }

    /// Edges ordered by (from, to).
    std::vector<GraphEdge> edges() const;
    std::size_t edge_count() const;
    const std::map<NodeKey, bool>& successors(const NodeKey& key) const;

    /// Abstract and unresolved nodes: the extra seeds of the conservative
    /// variant.
    std::vector<NodeKey> seed_extension() const;

    GraphMeta meta;
    /// Packages whose functions this graph defines.
    std::set<std::string> packages;

    friend bool operator==(const DualCallGraph& a, const DualCallGraph& b) {
        return a.nodes_ == b.nodes_ && a.edges_ == b.edges_;
    }

private:
    std::map<NodeKey, GraphNode> nodes_;
    std::map<NodeKey, std::map<NodeKey, bool>> edges_;
};

struct BuildOptions {
    std::set<std::string> trusted;
    int depth_cap = 8;
    bool early_termination = false;
};

/// Graph of one package: nodes for its functions, the instantiations its
/// bodies reach, and references to callees in other packages (edges to
/// them are tagged external).
DualCallGraph build_package_graph(const CorpusIndex& index, const std::string& package,
                                  const BuildOptions& options = {});

/// Per-package graphs of every package, merged. Requires a resolved,
/// error-free corpus and depth_cap >= 1.
DualCallGraph build_extended_call_graph(const Corpus& corpus, const BuildOptions& options = {});

/// Union of per-package graphs. Throws DanglingReferenceError when a
/// referenced function belongs to a package none of the graphs covers.
DualCallGraph merge_package_graphs(std::span<const DualCallGraph> graphs);

struct Instantiation {
    enum class Status {
        Ground,     ///< `key` names (callee, substitution)
        Ungrounded, ///< type arguments still mention the caller's generics
        Unresolved, ///< depth cap exceeded
        Dynamic,    ///< generic receiver instantiated with a dyn type
        Unbound,    ///< generic receiver inside an un-grounded caller
    };
    Status status = Status::Unresolved;
    const FunctionRecord* callee = nullptr;
    Substitution substitution;
    NodeKey key;
    std::string interface; ///< Dynamic
    std::string method;    ///< Dynamic
};

/// Substitutes the call's type arguments through the caller's substitution.
/// A ground result already present in `memo` is returned as is; otherwise
/// it is Unresolved when `depth + 1` exceeds `depth_cap`. Handles Generic
/// and GenericReceiver call sites.
Instantiation instantiate_generic_call(const CorpusIndex& index, const CallSiteRecord& call,
                                       const Substitution& caller, int depth, int depth_cap,
                                       const DualCallGraph* memo = nullptr);

struct MethodTarget {
    bool dynamic = false;
    const FunctionRecord* function = nullptr; ///< static target
    std::string interface;                    ///< dynamic target
    std::string method;
};

/// Concrete receivers resolve to their implementation method (restricted to
/// `interface` when given), dyn receivers to (interface, method). Throws
/// NoImplementationError when a concrete receiver lacks the method or when
/// several implementations provide it.
MethodTarget resolve_method_call(const CorpusIndex& index, const TypeRef& receiver, std::string_view method,
                                 std::string_view interface = {});

using Adjacency = std::map<NodeKey, std::set<NodeKey>>;

/// Forward adjacency with every node present as a key.
Adjacency adjacency(const DualCallGraph& graph);
Adjacency reverse_graph(const DualCallGraph& graph);
Adjacency reverse_graph(const Adjacency& adj);

/// Per-node truncation flags recorded during construction.
std::map<NodeKey, bool> early_termination_mark(const DualCallGraph& graph);

/// Node keys for graph-only nodes.
NodeKey dynamic_key(std::string_view interface, std::string_view method);
NodeKey receiver_key(const NodeKey& caller, std::string_view generic_var, std::string_view method);
NodeKey indirect_key(std::string_view function, const SourceLoc& loc);
NodeKey unresolved_key(const NodeKey& instantiation);

} // namespace unsafety::graph
