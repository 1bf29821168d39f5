#include "unsafety/analysis.hpp"

#include <algorithm>
#include <deque>
#include <numeric>

namespace unsafety::analysis {

std::string_view to_string(Mode mode) {
    return mode == Mode::Conservative ? "conservative" : "optimistic";
}

std::optional<Mode> parse_mode(std::string_view text) {
    if (text == "conservative") {
        return Mode::Conservative;
    }
    if (text == "optimistic") {
        return Mode::Optimistic;
    }
    return std::nullopt;
}

std::string_view to_string(Label label) {
    return label == Label::Safe ? "safe" : "possibly-unsafe";
}

std::set<NodeKey> seed_worklist(const graph::DualCallGraph& graph, const CorpusIndex& index, Mode mode) {
    std::set<NodeKey> seeds;
    for (const auto& [key, node] : graph.nodes()) {
        switch (node.kind) {
        case graph::NodeKind::Abstract:
        case graph::NodeKind::Unresolved:
            if (mode == Mode::Conservative) {
                seeds.insert(key);
            }
            break;
        case graph::NodeKind::Ground:
        case graph::NodeKind::Ungrounded: {
            if (graph.meta.trusted.count(node.package) != 0) {
                break;
            }
            const FunctionRecord* fn = index.function(node.function);
            if (fn != nullptr && contains_unsafe_block(fn->body)) {
                seeds.insert(key);
            }
            break;
        }
        }
    }
    return seeds;
}

Propagation propagate_unsafety(const graph::DualCallGraph& graph, const std::set<NodeKey>& seeds) {
    Propagation out;
    for (const auto& [key, node] : graph.nodes()) {
        out.labels.emplace(key, Label::Safe);
        out.enqueued.emplace(key, 0);
    }
    graph::Adjacency callers = graph::reverse_graph(graph);

    std::deque<NodeKey> worklist;
    auto mark = [&](const NodeKey& key) {
        Label& label = out.labels.at(key);
        if (label == Label::Safe) {
            label = Label::PossiblyUnsafe;
            ++out.enqueued[key];
            worklist.push_back(key);
        }
    };
    for (const auto& seed : seeds) {
        if (!graph.contains(seed)) {
            throw graph::GraphError("seed " + seed.value + " is not a node of the graph");
        }
        mark(seed);
    }
    while (!worklist.empty()) {
        NodeKey current = std::move(worklist.front());
        worklist.pop_front();
        for (const auto& caller : callers[current]) {
            mark(caller);
        }
    }
    return out;
}

Label classify_function(const FunctionRecord& fn, const NodeLabels& labels) {
    if (fn.declared_unsafe) {
        return Label::PossiblyUnsafe;
    }
    auto it = labels.find(representative_key(fn));
    return it == labels.end() ? Label::Safe : it->second;
}

std::vector<FunctionVerdict> analyze(const Corpus& corpus, const graph::DualCallGraph& graph, Mode mode) {
    CorpusIndex index(corpus);
    Propagation result = propagate_unsafety(graph, seed_worklist(graph, index, mode));
    std::vector<std::string> vacuous = find_vacuous_declared_unsafe(corpus);

    std::vector<FunctionVerdict> out;
    for (const auto& pkg : corpus.packages) {
        for (const auto& fn : pkg.functions) {
            FunctionVerdict v;
            v.id = fn.id;
            v.package = pkg.name;
            v.mode = mode;
            v.label = classify_function(fn, result.labels);
            v.declared_unsafe = fn.declared_unsafe;
            v.vacuous = std::binary_search(vacuous.begin(), vacuous.end(), fn.id);
            out.push_back(std::move(v));
        }
    }
    std::sort(out.begin(), out.end(), [](const FunctionVerdict& a, const FunctionVerdict& b) { return a.id < b.id; });
    return out;
}

std::vector<FunctionVerdict> analyze_both(const Corpus& corpus, const graph::DualCallGraph& graph) {
    std::vector<FunctionVerdict> out = analyze(corpus, graph, Mode::Conservative);
    std::vector<FunctionVerdict> optimistic = analyze(corpus, graph, Mode::Optimistic);
    out.insert(out.end(), optimistic.begin(), optimistic.end());
    std::stable_sort(out.begin(), out.end(), [](const FunctionVerdict& a, const FunctionVerdict& b) {
        return a.id != b.id ? a.id < b.id : a.mode < b.mode;
    });
    return out;
}

// ---------------------------------------------------------------------------
// Censuses

std::string_view to_string(OpContext context) {
    return context == OpContext::Block ? "block" : "function";
}

std::uint64_t OpCounts::get(OpContext context, UnsafeOpKind kind) const {
    return counts[static_cast<std::size_t>(context)][static_cast<std::size_t>(kind)];
}

void OpCounts::add(OpContext context, UnsafeOpKind kind, std::uint64_t n) {
    counts[static_cast<std::size_t>(context)][static_cast<std::size_t>(kind)] += n;
}

std::uint64_t OpCounts::total(OpContext context) const {
    const auto& row = counts[static_cast<std::size_t>(context)];
    return std::accumulate(row.begin(), row.end(), std::uint64_t{0});
}

std::uint64_t OpCounts::total() const { return total(OpContext::Block) + total(OpContext::Function); }

OpCounts& OpCounts::operator+=(const OpCounts& other) {
    for (std::size_t c = 0; c < counts.size(); ++c) {
        for (std::size_t k = 0; k < counts[c].size(); ++k) {
            counts[c][k] += other.counts[c][k];
        }
    }
    return *this;
}

OpCensus classify_unsafe_ops(const Corpus& corpus) {
    OpCensus census;
    for (const auto& pkg : corpus.packages) {
        OpCounts& counts = census.packages[pkg.name];
        for (const auto& fn : pkg.functions) {
            if (fn.generated) {
                continue;
            }
            walk_statements(fn.body, [&](const Statement& stmt, int depth) {
                if (!is_unsafe_operation(stmt)) {
                    return;
                }
                OpContext context = OpContext::Block;
                if (depth == 0) {
                    if (!fn.declared_unsafe) {
                        return;
                    }
                    context = OpContext::Function;
                }
                const auto* prim = std::get_if<Primitive>(&stmt.node);
                counts.add(context, prim != nullptr ? prim->kind : UnsafeOpKind::UnsafeCall);
            });
        }
        census.total += counts;
    }
    return census;
}

std::string_view to_string(AbiBin bin) {
    switch (bin) {
    case AbiBin::Native:
        return "native";
    case AbiBin::C:
        return "C";
    case AbiBin::Intrinsic:
        return "intrinsic";
    case AbiBin::TrustedPackage:
        return "trusted-package";
    }
    return "?";
}

std::uint64_t AbiCensus::total() const {
    return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

AbiCensus classify_called_abis(const Corpus& corpus, const std::set<std::string>& trusted) {
    CorpusIndex index(corpus);
    AbiCensus census;
    auto bin_of = [&](const CallSiteRecord& call) {
        const FunctionRecord* callee = index.function(call.target);
        if (callee == nullptr) {
            // Dispatch through an interface signature.
            const InterfaceRecord* iface = index.interface(call.interface);
            std::string package = iface != nullptr ? iface->id.substr(0, iface->id.find("::")) : std::string();
            return trusted.count(package) != 0 ? AbiBin::TrustedPackage : AbiBin::Native;
        }
        if (trusted.count(callee->package) != 0) {
            return AbiBin::TrustedPackage;
        }
        if (callee->origin == Origin::External) {
            if (callee->abi == "C") {
                return AbiBin::C;
            }
            if (callee->abi == "intrinsic") {
                return AbiBin::Intrinsic;
            }
        }
        return AbiBin::Native;
    };
    for (const auto& pkg : corpus.packages) {
        for (const auto& fn : pkg.functions) {
            if (fn.generated) {
                continue;
            }
            walk_statements(fn.body, [&](const Statement& stmt, int) {
                const auto* call = std::get_if<CallSiteRecord>(&stmt.node);
                if (call != nullptr && call->target_unsafe) {
                    ++census.counts[static_cast<std::size_t>(bin_of(*call))];
                }
            });
        }
    }
    return census;
}

std::vector<std::string> find_vacuous_declared_unsafe(const Corpus& corpus) {
    std::vector<std::string> out;
    for (const auto& pkg : corpus.packages) {
        for (const auto& fn : pkg.functions) {
            if (fn.declared_unsafe && fn.origin == Origin::Native && !contains_unsafe_operation(fn.body)) {
                out.push_back(fn.id);
            }
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace unsafety::analysis
