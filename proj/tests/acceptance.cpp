// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any
// failure.

#include "fixtures.hpp"
#include "oracles.hpp"
#include "random_corpus.hpp"

#include "unsafety/analysis.hpp"
#include "unsafety/cli.hpp"
#include "unsafety/frontend.hpp"
#include "unsafety/graph.hpp"
#include "unsafety/metrics.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

using namespace unsafety;
namespace fs = std::filesystem;

namespace {

constexpr int kRandomCorpora = 250;

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool condition, const std::string& what) {
        if (!condition && pass) {
            pass = false;
            detail = what;
        }
    }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::set<std::string> possibly_unsafe(const std::vector<analysis::FunctionVerdict>& verdicts) {
    std::set<std::string> out;
    for (const auto& v : verdicts) {
        if (v.label == analysis::Label::PossiblyUnsafe) {
            out.insert(v.id);
        }
    }
    return out;
}

std::string join(const std::set<std::string>& items) {
    std::string out = "{";
    for (const auto& item : items) {
        out += (out.size() > 1 ? ", " : "") + item;
    }
    return out + "}";
}

const std::vector<Corpus>& random_corpora() {
    static const std::vector<Corpus> corpora = [] {
        std::vector<Corpus> out;
        for (int seed = 0; seed < kRandomCorpora; ++seed) {
            out.push_back(testsupport::load_sources(testsupport::random_corpus(static_cast<std::uint64_t>(seed))));
        }
        return out;
    }();
    return corpora;
}

// ---------------------------------------------------------------------------

Outcome libraries_verdicts() {
    Outcome o;
    auto start = Clock::now();
    Corpus corpus = testsupport::load_fixture("libraries");
    graph::DualCallGraph g = graph::build_extended_call_graph(corpus);
    auto cons = possibly_unsafe(analysis::analyze(corpus, g, analysis::Mode::Conservative));
    auto opt = possibly_unsafe(analysis::analyze(corpus, g, analysis::Mode::Optimistic));
    double elapsed = seconds_since(start);

    const std::set<std::string> want_cons = {"library1::foo", "library2::bar", "library5::TypeB::baz", "library4::qux"};
    const std::set<std::string> want_opt = {"library5::TypeB::baz", "library4::qux"};
    o.require(cons == want_cons, "conservative set " + join(cons));
    o.require(opt == want_opt, "optimistic set " + join(opt));
    o.require(cons.count("library3::TypeA::baz") == 0 && opt.count("library3::TypeA::baz") == 0,
              "library3::TypeA::baz is not safe");
    o.require(elapsed < 1.0, "took " + std::to_string(elapsed) + " s");
    if (o.pass) {
        o.detail = "conservative " + join(cons) + ", optimistic " + join(opt);
    }
    return o;
}

Outcome oracle_equivalence() {
    Outcome o;
    auto start = Clock::now();
    std::uint64_t nodes = 0;
    std::uint64_t dynamic_calls = 0;
    std::uint64_t blocks = 0;
    for (std::size_t i = 0; i < random_corpora().size(); ++i) {
        const Corpus& corpus = random_corpora()[i];
        std::size_t functions = 0;
        std::size_t calls = 0;
        for (const auto& pkg : corpus.packages) {
            functions += pkg.functions.size();
            for (const auto& fn : pkg.functions) {
                walk_statements(fn.body, [&](const Statement& stmt, int) {
                    if (const auto* call = std::get_if<CallSiteRecord>(&stmt.node)) {
                        ++calls;
                        dynamic_calls += call->kind == CallKind::Dynamic ? 1 : 0;
                    }
                    blocks += std::holds_alternative<UnsafeBlock>(stmt.node) ? 1 : 0;
                });
            }
        }
        o.require(functions <= 50 && calls <= 150, "corpus " + std::to_string(i) + " exceeds the size bounds");

        CorpusIndex index(corpus);
        graph::DualCallGraph g = graph::build_extended_call_graph(corpus);
        for (auto mode : analysis::kModes) {
            auto seeds = analysis::seed_worklist(g, index, mode);
            auto result = analysis::propagate_unsafety(g, seeds);
            o.require(result.labels == testsupport::brute_force_oracle(g, seeds),
                      "corpus " + std::to_string(i) + " " + std::string(analysis::to_string(mode)) +
                          ": labels differ from the oracle");
            o.require(possibly_unsafe(analysis::analyze(corpus, g, mode)) ==
                          testsupport::possibly_unsafe_oracle(corpus, g, mode),
                      "corpus " + std::to_string(i) + ": function verdicts differ from the oracle");
            nodes += result.labels.size();
        }
    }
    double elapsed = seconds_since(start);
    o.require(dynamic_calls > 0 && blocks > 0, "random corpora lack dynamic calls or unsafe blocks");
    o.require(elapsed < 30.0, "took " + std::to_string(elapsed) + " s");
    if (o.pass) {
        std::ostringstream s;
        s << random_corpora().size() << " corpora, " << nodes << " node labels, " << dynamic_calls
          << " dynamic calls, " << blocks << " unsafe blocks, " << elapsed << " s";
        o.detail = s.str();
    }
    return o;
}

Outcome mode_monotonicity() {
    Outcome o;
    std::uint64_t gap = 0;
    for (std::size_t i = 0; i < random_corpora().size(); ++i) {
        const Corpus& corpus = random_corpora()[i];
        graph::DualCallGraph g = graph::build_extended_call_graph(corpus);
        auto cons = possibly_unsafe(analysis::analyze(corpus, g, analysis::Mode::Conservative));
        auto opt = possibly_unsafe(analysis::analyze(corpus, g, analysis::Mode::Optimistic));
        for (const auto& id : opt) {
            o.require(cons.count(id) == 1, "corpus " + std::to_string(i) + ": " + id + " only optimistic");
        }
        gap += cons.size() - opt.size();
    }
    if (o.pass) {
        o.detail = "0 violations over " + std::to_string(random_corpora().size()) + " corpora; " +
                   std::to_string(gap) + " functions unsafe only conservatively";
    }
    return o;
}

Outcome early_termination() {
    Outcome o;
    std::vector<std::pair<std::string, Corpus>> inputs;
    for (const char* name : {"libraries", "generic_chain", "depth_cap", "chain4", "census/abi", "census/ops", "trusted",
                             "snapshot/old", "snapshot/new", "discipline/redundant", "discipline/vacuous"}) {
        inputs.emplace_back(name, testsupport::load_fixture(name));
    }
    for (std::size_t i = 0; i < random_corpora().size(); ++i) {
        inputs.emplace_back("random " + std::to_string(i), random_corpora()[i]);
    }
    std::uint64_t compared = 0;
    std::uint64_t truncated = 0;
    for (const auto& [name, corpus] : inputs) {
        for (int cap : {1, 2, 3, 8}) {
            for (const std::set<std::string>& trusted : {std::set<std::string>{}, std::set<std::string>{"std"}}) {
                graph::BuildOptions off;
                off.depth_cap = cap;
                off.trusted = trusted;
                graph::BuildOptions on = off;
                on.early_termination = true;
                graph::DualCallGraph a = graph::build_extended_call_graph(corpus, off);
                graph::DualCallGraph b = graph::build_extended_call_graph(corpus, on);
                for (const auto& [key, flag] : graph::early_termination_mark(b)) {
                    truncated += flag ? 1 : 0;
                }
                auto va = analysis::analyze_both(corpus, a);
                auto vb = analysis::analyze_both(corpus, b);
                bool same = va.size() == vb.size();
                for (std::size_t k = 0; same && k < va.size(); ++k) {
                    same = va[k].id == vb[k].id && va[k].mode == vb[k].mode && va[k].label == vb[k].label;
                }
                o.require(same, name + " at depth cap " + std::to_string(cap) + ": verdicts differ");
                compared += va.size();
            }
        }
    }
    o.require(truncated > 0, "no body was ever truncated");
    if (o.pass) {
        o.detail = std::to_string(compared) + " verdict pairs identical (" + std::to_string(truncated) +
                   " truncated bodies)";
    }
    return o;
}

std::set<std::string> node_keys(const graph::DualCallGraph& g) {
    std::set<std::string> out;
    for (const auto& [key, node] : g.nodes()) {
        out.insert(key.value);
    }
    return out;
}

Outcome generic_instantiation() {
    Outcome o;
    Corpus chain = testsupport::load_fixture("generic_chain");
    auto chain_nodes = node_keys(graph::build_extended_call_graph(chain));
    const std::set<std::string> want_chain = {"chain::main",  "chain::f<T=chain::TypeA>", "chain::g<T=chain::TypeA>",
                                              "chain::h<T=chain::TypeA>", "chain::f<T>", "chain::g<T>",
                                              "chain::h<T>"};
    o.require(chain_nodes == want_chain, "generic chain nodes " + join(chain_nodes));

    Corpus rec = testsupport::load_fixture("depth_cap");
    graph::BuildOptions options;
    options.depth_cap = 3;
    auto start = Clock::now();
    graph::DualCallGraph capped = graph::build_extended_call_graph(rec, options);
    double elapsed = seconds_since(start);
    auto rec_nodes = node_keys(capped);
    const std::set<std::string> want_rec = {"rec::main", "rec::f<T=rec::TypeA>", "rec::g<T=rec::TypeA>",
                                            "rec::h<T=rec::TypeA>", "unresolved(rec::k<T=rec::TypeA>)",
                                            "rec::f<T>", "rec::g<T>", "rec::h<T>", "rec::k<T>"};
    o.require(rec_nodes == want_rec, "depth-cap nodes " + join(rec_nodes));
    const graph::GraphNode* unresolved = capped.node(NodeKey{"unresolved(rec::k<T=rec::TypeA>)"});
    o.require(unresolved != nullptr && unresolved->kind == graph::NodeKind::Unresolved, "no unresolved node");
    if (o.pass) {
        std::ostringstream s;
        s << chain_nodes.size() << " chain nodes; " << rec_nodes.size()
          << " nodes at cap 3 including unresolved(rec::k<T=rec::TypeA>), built in " << elapsed << " s";
        o.detail = s.str();
    }
    return o;
}

Outcome discipline() {
    Outcome o;
    auto load = [](const char* name) { return frontend::load_corpus(testsupport::fixture_sources(name)); };

    auto call = load("discipline/unsafe_call");
    o.require(call.diagnostics.size() == 1 && call.diagnostics[0].severity == Severity::Error &&
                  call.diagnostics[0].code == "E-UNSAFE-OP",
              "unsafe call: expected exactly one E-UNSAFE-OP error");

    auto redundant = load("discipline/redundant");
    o.require(redundant.diagnostics.size() == 1 && redundant.diagnostics[0].severity == Severity::Warning &&
                  redundant.diagnostics[0].code == "W-REDUNDANT-UNSAFE",
              "empty unsafe block: expected exactly W-REDUNDANT-UNSAFE");

    auto vacuous = load("discipline/vacuous");
    o.require(vacuous.diagnostics.empty(), "vacuous fixture produced diagnostics");
    auto listed = analysis::find_vacuous_declared_unsafe(vacuous.corpus);
    o.require(listed == std::vector<std::string>{"lib::nothing_unsafe_here"}, "vacuous list is wrong");
    if (o.pass) {
        o.detail = "1 E-UNSAFE-OP, 1 W-REDUNDANT-UNSAFE, vacuous [lib::nothing_unsafe_here] with 0 warnings";
    }
    return o;
}

Outcome libraries_metrics() {
    Outcome o;
    Corpus corpus = testsupport::load_fixture("libraries");
    graph::DualCallGraph g = graph::build_extended_call_graph(corpus);
    auto verdicts = analysis::analyze_both(corpus, g);
    auto packages = metrics::compute_package_metrics(corpus, verdicts);

    auto prevalence = metrics::abstraction_prevalence(packages);
    o.require(prevalence.any.percent() == "40.0", "prevalence any " + prevalence.any.percent());
    o.require(prevalence.blocks.percent() == "20.0", "prevalence blocks " + prevalence.blocks.percent());

    auto m = metrics::dependency_unsafety_matrix(packages);
    std::string matrix = m.own_and_deps.percent() + "/" + m.own_only.percent() + "/" + m.deps_only.percent() + "/" +
                         m.neither.percent();
    o.require(matrix == "20.0/20.0/40.0/20.0", "matrix " + matrix);

    auto cons = metrics::only_safe_percentage(packages, analysis::Mode::Conservative).percent();
    auto opt = metrics::only_safe_percentage(packages, analysis::Mode::Optimistic).percent();
    o.require(cons == "20.0" && opt == "60.0", "only-safe " + cons + "/" + opt);

    std::vector<std::uint64_t> blocks;
    for (const auto& p : packages) {
        blocks.push_back(p.counts.blocks);
    }
    auto cdf = metrics::cdf_series(blocks);
    std::string series;
    for (const auto& p : cdf.points) {
        series += "(" + std::to_string(p.value) + "," + p.fraction.percent() + ")";
    }
    o.require(series == "(0,80.0)(1,100.0)", "block cdf " + series);

    auto mean = metrics::mean_direct_dependencies(packages).decimal();
    o.require(mean == "1.0", "mean direct deps " + mean);
    if (o.pass) {
        o.detail = "any 40.0, blocks 20.0, matrix " + matrix + ", only-safe " + cons + "/" + opt + ", cdf " + series +
                   ", mean deps " + mean;
    }
    return o;
}

Outcome snapshot_diff() {
    Outcome o;
    auto old_snapshot = metrics::compute_counts_only(testsupport::load_fixture("snapshot/old"));
    auto new_snapshot = metrics::compute_counts_only(testsupport::load_fixture("snapshot/new"));

    auto self = metrics::snapshot_diff(old_snapshot, old_snapshot);
    o.require(self.summary.blocks[0].percent() == "100.0" && self.summary.unsafe_fns[0].percent() == "100.0",
              "diff(x, x) is not 100% same");

    auto diff = metrics::snapshot_diff(old_snapshot, new_snapshot);
    o.require(diff.records.size() == 10, "expected 10 matched packages");
    std::string blocks = diff.summary.blocks[0].percent() + "/" + diff.summary.blocks[1].percent() + "/" +
                         diff.summary.blocks[2].percent();
    o.require(blocks == "90.0/10.0/0.0", "blocks same/increase/decrease " + blocks);
    if (o.pass) {
        o.detail = "diff(x,x) 100.0 same; blocks same/increase/decrease " + blocks;
    }
    return o;
}

struct Captured {
    int code;
    std::string out;
    std::string err;
};

Captured invoke(const std::vector<std::string>& args) {
    std::ostringstream out;
    std::ostringstream err;
    int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Outcome determinism() {
    Outcome o;
    auto fixture = testsupport::fixture_path;
    const std::vector<std::vector<std::string>> commands = {
        {"check", fixture("libraries")},
        {"check", fixture("discipline/redundant")},
        {"graph", fixture("libraries")},
        {"graph", "--early-termination", "--depth-cap", "3", fixture("depth_cap")},
        {"analyze", fixture("libraries")},
        {"analyze", "--format", "json", "--trusted", "std", fixture("trusted")},
        {"metrics", fixture("libraries")},
        {"metrics", "--cap-percentile", "99.5", fixture("census")},
        {"diff", fixture("snapshot/old"), fixture("snapshot/new")},
        {"diff", "--format", "json", fixture("snapshot/old"), fixture("snapshot/new")},
    };
    for (const auto& args : commands) {
        Captured a = invoke(args);
        Captured b = invoke(args);
        o.require(a.code == cli::kExitOk, args.front() + " failed with exit " + std::to_string(a.code));
        o.require(a.out == b.out && a.err == b.err, args.front() + " output differs between runs");
    }

    std::random_device rd;
    fs::path root = fs::temp_directory_path() / ("unsafety-acceptance-" + std::to_string(rd()));
    std::size_t files = 0;
    for (const char* sub : {"first", "second"}) {
        Captured c = invoke({"metrics", fixture("libraries"), "--out", (root / sub).string()});
        o.require(c.code == cli::kExitOk, "metrics --out failed");
    }
    for (const char* name : {"metrics.csv", "cdf_blocks.csv", "cdf_unsafe_fns.csv"}) {
        std::string a = slurp(root / "first" / name);
        o.require(!a.empty() && a == slurp(root / "second" / name), std::string(name) + " differs between runs");
        ++files;
    }
    std::error_code ec;
    fs::remove_all(root, ec);
    if (o.pass) {
        o.detail = std::to_string(commands.size()) + " commands and " + std::to_string(files) +
                   " metrics files byte-identical across two runs";
    }
    return o;
}

Outcome censuses() {
    Outcome o;
    auto abis = analysis::classify_called_abis(testsupport::load_fixture("census/abi"));
    using analysis::AbiBin;
    std::string counts = std::to_string(abis.get(AbiBin::Native)) + "/" + std::to_string(abis.get(AbiBin::C)) + "/" +
                         std::to_string(abis.get(AbiBin::Intrinsic));
    std::string shares = abis.share(AbiBin::Native).percent() + "/" + abis.share(AbiBin::C).percent() + "/" +
                         abis.share(AbiBin::Intrinsic).percent();
    o.require(counts == "13/4/3", "ABI counts native/C/intrinsic " + counts);
    o.require(shares == "65.0/20.0/15.0", "ABI shares " + shares);
    o.require(abis.get(AbiBin::TrustedPackage) == 0, "unexpected trusted-package calls");

    auto ops = analysis::classify_unsafe_ops(testsupport::load_fixture("census/ops"));
    using analysis::OpContext;
    o.require(ops.total.get(OpContext::Block, UnsafeOpKind::RawDeref) == 3, "expected 3 raw derefs in blocks");
    o.require(ops.total.get(OpContext::Function, UnsafeOpKind::InlineAsm) == 2,
              "expected 2 inline asm in unsafe function bodies");
    o.require(ops.total.total() == 5, "unexpected extra operations");

    auto libraries = analysis::classify_unsafe_ops(testsupport::load_fixture("libraries"));
    o.require(libraries.total.get(OpContext::Block, UnsafeOpKind::UnsafeCall) == 1 &&
                  libraries.total.get(OpContext::Block, UnsafeOpKind::GlobalAccess) == 1 && libraries.total.total() == 2,
              "libraries operation census");
    if (o.pass) {
        o.detail = "ABI " + counts + " -> " + shares + "%; ops 3 raw_deref (block), 2 inline_asm (function)";
    }
    return o;
}

} // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"libraries verdicts in both modes", libraries_verdicts},
        {"propagation equals the brute-force oracle", oracle_equivalence},
        {"optimistic verdicts are contained in conservative ones", mode_monotonicity},
        {"early termination leaves verdicts unchanged", early_termination},
        {"generic instantiation and depth cap", generic_instantiation},
        {"unsafe discipline diagnostics", discipline},
        {"libraries corpus metrics", libraries_metrics},
        {"snapshot diff", snapshot_diff},
        {"deterministic subcommand output", determinism},
        {"operation and ABI censuses", censuses},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome outcome;
        try {
            outcome = criteria[i].second();
        } catch (const std::exception& e) {
            outcome.pass = false;
            outcome.detail = std::string("exception: ") + e.what();
        }
        failures += outcome.pass ? 0 : 1;
        std::cout << (outcome.pass ? "PASS" : "FAIL") << " criterion " << (i + 1) << ": " << criteria[i].first;
        if (!outcome.detail.empty()) {
            std::cout << " (" << outcome.detail << ")";
        }
        std::cout << '\n';
    }
    std::cout << (criteria.size() - static_cast<std::size_t>(failures)) << "/" << criteria.size()
              << " criteria passed\n";
    return failures == 0 ? 0 : 1;
}
