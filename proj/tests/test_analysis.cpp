#include "doctest.h"

#include "fixtures.hpp"
#include "oracles.hpp"
#include "random_corpus.hpp"

#include "unsafety/analysis.hpp"

#include <random>
#include <set>

using namespace unsafety;
using namespace unsafety::analysis;

namespace {

std::set<std::string> keys(const std::set<NodeKey>& nodes) {
    std::set<std::string> out;
    for (const auto& k : nodes) {
        out.insert(k.value);
    }
    return out;
}

std::set<std::string> unsafe_nodes(const NodeLabels& labels) {
    std::set<std::string> out;
    for (const auto& [key, label] : labels) {
        if (label == Label::PossiblyUnsafe) {
            out.insert(key.value);
        }
    }
    return out;
}

std::set<std::string> possibly_unsafe(const std::vector<FunctionVerdict>& verdicts) {
    std::set<std::string> out;
    for (const auto& v : verdicts) {
        if (v.label == Label::PossiblyUnsafe) {
            out.insert(v.id);
        }
    }
    return out;
}

const FunctionVerdict& verdict(const std::vector<FunctionVerdict>& verdicts, const std::string& id) {
    for (const auto& v : verdicts) {
        if (v.id == id) {
            return v;
        }
    }
    FAIL("no verdict for " << id);
    throw std::logic_error("unreachable");
}

std::uint64_t count_unsafe_call_sites(const Corpus& corpus) {
    std::uint64_t n = 0;
    for (const auto& pkg : corpus.packages) {
        for (const auto& fn : pkg.functions) {
            walk_statements(fn.body, [&](const Statement& stmt, int) {
                if (const auto* call = std::get_if<CallSiteRecord>(&stmt.node); call != nullptr && call->target_unsafe) {
                    ++n;
                }
            });
        }
    }
    return n;
}

} // namespace

// ---------------------------------------------------------------------------
// Seeds and propagation

TEST_CASE("libraries seeds per mode") {
    Corpus corpus = testsupport::load_fixture("libraries");
    CorpusIndex index(corpus);
    graph::DualCallGraph g = graph::build_extended_call_graph(corpus);
    CHECK(keys(seed_worklist(g, index, Mode::Conservative)) ==
          std::set<std::string>{"library5::TypeB::baz", "abstract(library3::HasBaz::baz)"});
    CHECK(keys(seed_worklist(g, index, Mode::Optimistic)) == std::set<std::string>{"library5::TypeB::baz"});
}

TEST_CASE("an all-safe corpus has no seeds") {
    Corpus corpus = testsupport::load_fixture("generic_chain");
    CorpusIndex index(corpus);
    graph::DualCallGraph g = graph::build_extended_call_graph(corpus);
    for (Mode mode : kModes) {
        CHECK(seed_worklist(g, index, mode).empty());
    }
}

TEST_CASE("trusted package bodies are never seeded") {
    Corpus corpus = testsupport::load_fixture("trusted");
    CorpusIndex index(corpus);
    graph::BuildOptions options;
    options.trusted = {"std"};
    graph::DualCallGraph g = graph::build_extended_call_graph(corpus, options);
    CHECK(keys(seed_worklist(g, index, Mode::Conservative)) == std::set<std::string>{"app::allocate"});

    auto verdicts = analyze(corpus, g, Mode::Conservative);
    CHECK(verdict(verdicts, "app::measure").label == Label::Safe);
    CHECK(verdict(verdicts, "app::allocate").label == Label::PossiblyUnsafe);
    CHECK(verdict(verdicts, "std::alloc").label == Label::PossiblyUnsafe);

    // Without the trust boundary std::len's own block makes measure unsafe.
    graph::DualCallGraph open = graph::build_extended_call_graph(corpus);
    CHECK(verdict(analyze(corpus, open, Mode::Optimistic), "app::measure").label == Label::PossiblyUnsafe);
}

TEST_CASE("libraries propagation") {
    Corpus corpus = testsupport::load_fixture("libraries");
    CorpusIndex index(corpus);
    graph::DualCallGraph g = graph::build_extended_call_graph(corpus);

    auto cons = propagate_unsafety(g, seed_worklist(g, index, Mode::Conservative));
    CHECK(unsafe_nodes(cons.labels) == std::set<std::string>{"library5::TypeB::baz", "abstract(library3::HasBaz::baz)",
                                                             "library2::bar", "library1::foo"});
    auto opt = propagate_unsafety(g, seed_worklist(g, index, Mode::Optimistic));
    CHECK(unsafe_nodes(opt.labels) == std::set<std::string>{"library5::TypeB::baz"});

    CHECK(cons.labels == testsupport::brute_force_oracle(g, seed_worklist(g, index, Mode::Conservative)));
    CHECK(unsafe_nodes(testsupport::brute_force_oracle(g, {})).empty());
}

TEST_CASE("propagation with no seeds labels everything safe") {
    std::mt19937_64 rng(3);
    graph::DualCallGraph g = testsupport::random_graph(rng);
    auto result = propagate_unsafety(g, {});
    CHECK(result.labels.size() == g.nodes().size());
    CHECK(unsafe_nodes(result.labels).empty());
}

TEST_CASE("propagation rejects unknown seeds") {
    graph::DualCallGraph g;
    CHECK_THROWS_AS(propagate_unsafety(g, {NodeKey{"p::ghost"}}), graph::GraphError);
}

TEST_CASE("propagation equals brute-force reachability on random graphs") {
    std::mt19937_64 rng(2024);
    for (int i = 0; i < 200; ++i) {
        graph::DualCallGraph g = testsupport::random_graph(rng, 50);
        auto seeds = testsupport::random_seeds(g, rng);
        auto result = propagate_unsafety(g, seeds);
        CHECK(result.labels == testsupport::brute_force_oracle(g, seeds));
        for (const auto& [key, n] : result.enqueued) {
            CHECK(n <= 1);
        }
    }
}

// ---------------------------------------------------------------------------
// Function verdicts

TEST_CASE("libraries function verdicts") {
    Corpus corpus = testsupport::load_fixture("libraries");
    graph::DualCallGraph g = graph::build_extended_call_graph(corpus);
    auto cons = analyze(corpus, g, Mode::Conservative);
    auto opt = analyze(corpus, g, Mode::Optimistic);

    for (const auto* verdicts : {&cons, &opt}) {
        const auto& qux = verdict(*verdicts, "library4::qux");
        CHECK(qux.label == Label::PossiblyUnsafe);
        CHECK(qux.declared_unsafe);
        CHECK(qux.vacuous);
        CHECK(verdict(*verdicts, "library3::TypeA::baz").label == Label::Safe);
        CHECK(verdict(*verdicts, "library5::TypeB::baz").label == Label::PossiblyUnsafe);
    }
    CHECK(verdict(cons, "library1::foo").label == Label::PossiblyUnsafe);
    CHECK(verdict(opt, "library1::foo").label == Label::Safe);
    CHECK(verdict(cons, "library2::bar").label == Label::PossiblyUnsafe);
    CHECK(verdict(opt, "library2::bar").label == Label::Safe);
    CHECK(cons.size() == 5);
}

TEST_CASE("classify_function unions the declaration with the node label") {
    FunctionRecord fn;
    fn.id = "p::f";
    NodeLabels labels{{NodeKey{"p::f"}, Label::Safe}};
    CHECK(classify_function(fn, labels) == Label::Safe);
    fn.declared_unsafe = true;
    CHECK(classify_function(fn, labels) == Label::PossiblyUnsafe);
    fn.declared_unsafe = false;
    labels[NodeKey{"p::f"}] = Label::PossiblyUnsafe;
    CHECK(classify_function(fn, labels) == Label::PossiblyUnsafe);

    FunctionRecord generic;
    generic.id = "p::g";
    generic.generics.push_back(GenericParam{"T", std::nullopt});
    NodeLabels glabels{{NodeKey{"p::g<T>"}, Label::PossiblyUnsafe}, {NodeKey{"p::g<T=p::A>"}, Label::Safe}};
    CHECK(classify_function(generic, glabels) == Label::PossiblyUnsafe);
}

TEST_CASE("generic functions are reported through their representative") {
    Corpus corpus = testsupport::load_fixture("depth_cap");
    graph::BuildOptions options;
    options.depth_cap = 3;
    graph::DualCallGraph g = graph::build_extended_call_graph(corpus, options);
    auto cons = analyze(corpus, g, Mode::Conservative);
    auto opt = analyze(corpus, g, Mode::Optimistic);
    CHECK(verdict(cons, "rec::main").label == Label::PossiblyUnsafe);
    CHECK(verdict(opt, "rec::main").label == Label::Safe);
    // The representatives of f, g, h, k never reach the capped instantiation.
    for (const char* id : {"rec::f", "rec::g", "rec::h", "rec::k"}) {
        CHECK(verdict(cons, id).label == Label::Safe);
    }
}

TEST_CASE("an empty safe function is safe in both modes") {
    Corpus corpus = testsupport::load_sources({{"e.ml", "package e; fn nothing() { }"}});
    graph::DualCallGraph g = graph::build_extended_call_graph(corpus);
    for (Mode mode : kModes) {
        auto verdicts = analyze(corpus, g, mode);
        REQUIRE(verdicts.size() == 1);
        CHECK(verdicts[0].label == Label::Safe);
        CHECK(verdicts[0].mode == mode);
    }
}

TEST_CASE("analyze_both orders by id then mode") {
    Corpus corpus = testsupport::load_fixture("libraries");
    auto both = analyze_both(corpus, graph::build_extended_call_graph(corpus));
    REQUIRE(both.size() == 10);
    for (std::size_t i = 0; i + 1 < both.size(); ++i) {
        CHECK(std::tie(both[i].id, both[i].mode) < std::tie(both[i + 1].id, both[i + 1].mode));
    }
    CHECK(both[0].id == "library1::foo");
    CHECK(both[0].mode == Mode::Conservative);
}

TEST_CASE("verdict properties on random corpora") {
    for (std::uint64_t seed = 0; seed < 80; ++seed) {
        CAPTURE(seed);
        Corpus corpus = testsupport::load_sources(testsupport::random_corpus(seed));
        graph::BuildOptions options;
        options.depth_cap = 1 + static_cast<int>(seed % 5);
        graph::DualCallGraph g = graph::build_extended_call_graph(corpus, options);
        auto cons = analyze(corpus, g, Mode::Conservative);
        auto opt = analyze(corpus, g, Mode::Optimistic);

        std::size_t functions = 0;
        for (const auto& pkg : corpus.packages) {
            functions += pkg.functions.size();
        }
        CHECK(cons.size() == functions);
        CHECK(opt.size() == functions);
        std::set<std::string> ids;
        for (const auto& v : cons) {
            ids.insert(v.id);
            if (v.declared_unsafe) {
                CHECK(v.label == Label::PossiblyUnsafe);
            }
        }
        CHECK(ids.size() == functions);

        auto cons_set = possibly_unsafe(cons);
        auto opt_set = possibly_unsafe(opt);
        for (const auto& id : opt_set) {
            CHECK(cons_set.count(id) == 1);
        }
        CHECK(cons_set == testsupport::possibly_unsafe_oracle(corpus, g, Mode::Conservative));
        CHECK(opt_set == testsupport::possibly_unsafe_oracle(corpus, g, Mode::Optimistic));
    }
}

TEST_CASE("early termination never changes a verdict") {
    for (std::uint64_t seed = 500; seed < 580; ++seed) {
        CAPTURE(seed);
        Corpus corpus = testsupport::load_sources(testsupport::random_corpus(seed));
        graph::BuildOptions off;
        off.depth_cap = 1 + static_cast<int>(seed % 4);
        graph::BuildOptions on = off;
        on.early_termination = true;
        graph::DualCallGraph a = graph::build_extended_call_graph(corpus, off);
        graph::DualCallGraph b = graph::build_extended_call_graph(corpus, on);
        CHECK(analyze_both(corpus, a).size() == analyze_both(corpus, b).size());
        auto va = analyze_both(corpus, a);
        auto vb = analyze_both(corpus, b);
        for (std::size_t i = 0; i < va.size(); ++i) {
            CHECK(va[i].id == vb[i].id);
            CHECK(va[i].label == vb[i].label);
        }
    }
}

TEST_CASE("adding an unsafe block never removes a possibly-unsafe function") {
    std::mt19937_64 rng(99);
    for (std::uint64_t seed = 600; seed < 660; ++seed) {
        CAPTURE(seed);
        Corpus corpus = testsupport::load_sources(testsupport::random_corpus(seed));
        graph::DualCallGraph before = graph::build_extended_call_graph(corpus);
        auto cons_before = possibly_unsafe(analyze(corpus, before, Mode::Conservative));
        auto opt_before = possibly_unsafe(analyze(corpus, before, Mode::Optimistic));

        auto& pkg = corpus.packages[rng() % corpus.packages.size()];
        if (pkg.functions.empty()) {
            continue;
        }
        auto& fn = pkg.functions[rng() % pkg.functions.size()];
        if (fn.origin != Origin::Native) {
            continue;
        }
        UnsafeBlock block;
        block.body.push_back(Statement{Primitive{UnsafeOpKind::RawDeref, {}, false, {}}});
        fn.body.insert(fn.body.begin() + static_cast<std::ptrdiff_t>(rng() % (fn.body.size() + 1)),
                       Statement{std::move(block)});
        const std::string changed = fn.id;

        graph::DualCallGraph after = graph::build_extended_call_graph(corpus);
        auto cons_after = possibly_unsafe(analyze(corpus, after, Mode::Conservative));
        auto opt_after = possibly_unsafe(analyze(corpus, after, Mode::Optimistic));
        for (const auto& id : cons_before) {
            CHECK(cons_after.count(id) == 1);
        }
        for (const auto& id : opt_before) {
            CHECK(opt_after.count(id) == 1);
        }
        CHECK(opt_after.count(changed) == 1);
    }
}

// ---------------------------------------------------------------------------
// Censuses

TEST_CASE("libraries operation census") {
    OpCensus census = classify_unsafe_ops(testsupport::load_fixture("libraries"));
    CHECK(census.total.get(OpContext::Block, UnsafeOpKind::UnsafeCall) == 1);
    CHECK(census.total.get(OpContext::Block, UnsafeOpKind::GlobalAccess) == 1);
    CHECK(census.total.total(OpContext::Block) == 2);
    CHECK(census.total.total(OpContext::Function) == 0);
    CHECK(census.packages.at("library5").total() == 2);
}

TEST_CASE("empty corpus census") {
    OpCensus census = classify_unsafe_ops(Corpus{});
    CHECK(census.total.total() == 0);
    CHECK(census.packages.empty());
    AbiCensus abis = classify_called_abis(Corpus{});
    CHECK(abis.total() == 0);
    CHECK(abis.share(AbiBin::Native).empty());
}

TEST_CASE("constructed operation census") {
    OpCensus census = classify_unsafe_ops(testsupport::load_fixture("census/ops"));
    CHECK(census.total.get(OpContext::Block, UnsafeOpKind::RawDeref) == 3);
    CHECK(census.total.get(OpContext::Function, UnsafeOpKind::InlineAsm) == 2);
    CHECK(census.total.total() == 5);
}

TEST_CASE("a block inside a declared-unsafe function wins the attribution") {
    Corpus corpus = testsupport::load_sources({{"n.ml", R"(
package n;
unsafe fn mixed() {
    @deref_ptr;
    unsafe { @asm; }
}
)"}});
    OpCensus census = classify_unsafe_ops(corpus);
    CHECK(census.total.get(OpContext::Function, UnsafeOpKind::RawDeref) == 1);
    CHECK(census.total.get(OpContext::Block, UnsafeOpKind::InlineAsm) == 1);
    CHECK(census.total.get(OpContext::Function, UnsafeOpKind::InlineAsm) == 0);
}

TEST_CASE("census totals are sums of package counts") {
    for (std::uint64_t seed = 700; seed < 740; ++seed) {
        Corpus corpus = testsupport::load_sources(testsupport::random_corpus(seed));
        OpCensus census = classify_unsafe_ops(corpus);
        OpCounts sum;
        for (const auto& [name, counts] : census.packages) {
            sum += counts;
        }
        CHECK(sum == census.total);

        AbiCensus abis = classify_called_abis(corpus);
        CHECK(abis.total() == count_unsafe_call_sites(corpus));
        CHECK(abis.total() == census.total.get(OpContext::Block, UnsafeOpKind::UnsafeCall) +
                                  census.total.get(OpContext::Function, UnsafeOpKind::UnsafeCall));
    }
}

TEST_CASE("libraries calls one native unsafe function") {
    AbiCensus abis = classify_called_abis(testsupport::load_fixture("libraries"));
    CHECK(abis.get(AbiBin::Native) == 1);
    CHECK(abis.total() == 1);
}

TEST_CASE("mixed ABI census") {
    AbiCensus abis = classify_called_abis(testsupport::load_fixture("census/abi"));
    CHECK(abis.get(AbiBin::Native) == 13);
    CHECK(abis.get(AbiBin::C) == 4);
    CHECK(abis.get(AbiBin::Intrinsic) == 3);
    CHECK(abis.get(AbiBin::TrustedPackage) == 0);
    CHECK(abis.share(AbiBin::Native).percent() == "65.0");
    CHECK(abis.share(AbiBin::C).percent() == "20.0");
    CHECK(abis.share(AbiBin::Intrinsic).percent() == "15.0");

    AbiCensus trusted = classify_called_abis(testsupport::load_fixture("census/abi"), {"natives"});
    CHECK(trusted.get(AbiBin::TrustedPackage) == 10);
    CHECK(trusted.get(AbiBin::Native) == 3);
}

TEST_CASE("only C targets") {
    Corpus corpus = testsupport::load_sources({{"c.ml", R"(
package c;
extern "C" fn strlen();
fn f() { unsafe { strlen(); strlen(); } }
)"}});
    AbiCensus abis = classify_called_abis(corpus);
    CHECK(abis.get(AbiBin::C) == 2);
    CHECK(abis.share(AbiBin::C).percent() == "100.0");
}

TEST_CASE("vacuous declared-unsafe functions") {
    CHECK(find_vacuous_declared_unsafe(testsupport::load_fixture("libraries")) == std::vector<std::string>{"library4::qux"});
    CHECK(find_vacuous_declared_unsafe(testsupport::load_fixture("discipline/vacuous")) ==
          std::vector<std::string>{"lib::nothing_unsafe_here"});
    CHECK(find_vacuous_declared_unsafe(testsupport::load_fixture("census/ops")).empty());
    CHECK(find_vacuous_declared_unsafe(
              testsupport::load_sources({{"d.ml", "package d; unsafe fn reads() { @deref_ptr; }"}}))
              .empty());
    for (std::uint64_t seed = 800; seed < 860; ++seed) {
        Corpus corpus = testsupport::load_sources(testsupport::random_corpus(seed));
        CHECK(find_vacuous_declared_unsafe(corpus) == testsupport::vacuous_oracle(corpus));
    }
}

TEST_CASE("mode names") {
    for (Mode mode : kModes) {
        CHECK(parse_mode(to_string(mode)) == mode);
    }
    CHECK_FALSE(parse_mode("both").has_value());
    CHECK(to_string(Label::PossiblyUnsafe) == "possibly-unsafe");
}
