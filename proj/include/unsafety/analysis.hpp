#pragma once

/// @file analysis.hpp
/// @brief Unsafety propagation over the extended call graph, per-function
/// verdicts, and censuses of unsafe operations and called ABIs.

#include "unsafety/graph.hpp"
#include "unsafety/model.hpp"
#include "unsafety/ratio.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace unsafety::analysis {

enum class Mode { Conservative, Optimistic };

inline constexpr std::array<Mode, 2> kModes = {Mode::Conservative, Mode::Optimistic};

std::string_view to_string(Mode mode);
std::optional<Mode> parse_mode(std::string_view text);

enum class Label { Safe, PossiblyUnsafe };

std::string_view to_string(Label label);

using NodeLabels = std::map<NodeKey, Label>;

/// Nodes whose function body holds a top-level unsafe block, plus every
/// abstract and unresolved node in conservative mode. Bodies of trusted
/// packages are never seeded.
std::set<NodeKey> seed_worklist(const graph::DualCallGraph& graph, const CorpusIndex& index, Mode mode);

struct Propagation {
    NodeLabels labels;
    /// Times each node was pushed onto the worklist; at most one.
    std::map<NodeKey, int> enqueued;
};

/// Reverse-graph worklist: every node that can reach a seed is possibly
/// unsafe. Throws graph::GraphError if a seed is not a node of `graph`.
Propagation propagate_unsafety(const graph::DualCallGraph& graph, const std::set<NodeKey>& seeds);

/// Possibly unsafe when declared unsafe or when the function's
/// representative node is. Functions without a node (interface signatures)
/// are labelled by their declaration alone.
Label classify_function(const FunctionRecord& fn, const NodeLabels& labels);

struct FunctionVerdict {
    std::string id;
    std::string package;
    Mode mode = Mode::Conservative;
    Label label = Label::Safe;
    bool declared_unsafe = false;
    bool vacuous = false;
};

/// One verdict per package function (free functions, external declarations
/// and implementation methods) for `mode`, ordered by id.
std::vector<FunctionVerdict> analyze(const Corpus& corpus, const graph::DualCallGraph& graph, Mode mode);

/// Verdicts of both modes ordered by (id, mode).
std::vector<FunctionVerdict> analyze_both(const Corpus& corpus, const graph::DualCallGraph& graph);

// ---------------------------------------------------------------------------
// Censuses

enum class OpContext { Block, Function };

inline constexpr std::array<OpContext, 2> kOpContexts = {OpContext::Block, OpContext::Function};

std::string_view to_string(OpContext context);

struct OpCounts {
    std::array<std::array<std::uint64_t, kUnsafeOpKinds.size()>, kOpContexts.size()> counts{};

    std::uint64_t get(OpContext context, UnsafeOpKind kind) const;
    void add(OpContext context, UnsafeOpKind kind, std::uint64_t n = 1);
    std::uint64_t total(OpContext context) const;
    std::uint64_t total() const;

    OpCounts& operator+=(const OpCounts& other);
    friend bool operator==(const OpCounts&, const OpCounts&) = default;
};

struct OpCensus {
    std::map<std::string, OpCounts> packages;
    OpCounts total;
};

/// Counts each unsafe operation once under its innermost context: inside an
/// unsafe block, or directly in a declared-unsafe function body. Generated
/// functions are skipped.
OpCensus classify_unsafe_ops(const Corpus& corpus);

enum class AbiBin { Native, C, Intrinsic, TrustedPackage };

inline constexpr std::array<AbiBin, 4> kAbiBins = {AbiBin::Native, AbiBin::C, AbiBin::Intrinsic,
                                                   AbiBin::TrustedPackage};

std::string_view to_string(AbiBin bin);

struct AbiCensus {
    std::array<std::uint64_t, kAbiBins.size()> counts{};

    std::uint64_t get(AbiBin bin) const { return counts[static_cast<std::size_t>(bin)]; }
    std::uint64_t total() const;
    Ratio share(AbiBin bin) const { return Ratio{get(bin), total()}; }
};

/// Bins every call site with a declared-unsafe target by the target's
/// origin. A trusted target package takes precedence over the origin;
/// calls through interface methods count as native.
AbiCensus classify_called_abis(const Corpus& corpus, const std::set<std::string>& trusted = {});

/// Declared-unsafe native functions whose lexical body holds no unsafe
/// operation, sorted by id.
std::vector<std::string> find_vacuous_declared_unsafe(const Corpus& corpus);

} // namespace unsafety::analysis
