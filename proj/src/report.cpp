#include "unsafety/report.hpp"

#include "json.hpp"

#include <sstream>

namespace unsafety::report {

using nlohmann::ordered_json;

namespace {

std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

const char* flag(bool b) { return b ? "true" : "false"; }

std::string percent_or_empty(const Ratio& r) { return r.empty() ? "" : r.percent(); }

} // namespace

std::string graph_json(const graph::DualCallGraph& graph) {
    ordered_json nodes = ordered_json::array();
    for (const auto& [key, node] : graph.nodes()) {
        ordered_json subst = ordered_json::object();
        for (const auto& [var, type] : node.substitution.entries()) {
            subst[var] = type.display();
        }
        nodes.push_back(ordered_json{{"key", key.value},
                                     {"kind", graph::to_string(node.kind)},
                                     {"function_id", node.function},
                                     {"substitution", std::move(subst)}});
    }
    ordered_json edges = ordered_json::array();
    for (const auto& edge : graph.edges()) {
        edges.push_back(ordered_json{{"from", edge.from.value}, {"to", edge.to.value}, {"external", edge.external}});
    }
    ordered_json meta{{"depth_cap", graph.meta.depth_cap},
                      {"trusted_packages", graph.meta.trusted},
                      {"early_termination", graph.meta.early_termination}};
    return dump(ordered_json{{"nodes", std::move(nodes)}, {"edges", std::move(edges)}, {"meta", std::move(meta)}});
}

std::string verdicts_json(std::span<const analysis::FunctionVerdict> verdicts) {
    ordered_json out = ordered_json::array();
    for (const auto& v : verdicts) {
        out.push_back(ordered_json{{"id", v.id},
                                   {"mode", analysis::to_string(v.mode)},
                                   {"label", analysis::to_string(v.label)},
                                   {"declared_unsafe", v.declared_unsafe},
                                   {"vacuous", v.vacuous}});
    }
    return dump(out);
}

std::string verdicts_csv(std::span<const analysis::FunctionVerdict> verdicts) {
    std::ostringstream os;
    os << "id,mode,label,declared_unsafe,vacuous\n";
    for (const auto& v : verdicts) {
        os << v.id << ',' << analysis::to_string(v.mode) << ',' << analysis::to_string(v.label) << ','
           << flag(v.declared_unsafe) << ',' << flag(v.vacuous) << '\n';
    }
    return os.str();
}

MetricsSummary summarize(const Corpus& corpus, std::span<const metrics::PackageMetrics> packages,
                         const std::set<std::string>& trusted, double cap_percent) {
    MetricsSummary s;
    s.prevalence = metrics::abstraction_prevalence(packages);
    s.only_safe_conservative = metrics::only_safe_percentage(packages, analysis::Mode::Conservative);
    s.only_safe_optimistic = metrics::only_safe_percentage(packages, analysis::Mode::Optimistic);
    s.matrix = metrics::dependency_unsafety_matrix(packages);
    s.mean_direct_deps = metrics::mean_direct_dependencies(packages);
    std::vector<std::uint64_t> blocks;
    std::vector<std::uint64_t> fns;
    for (const auto& m : packages) {
        blocks.push_back(m.counts.blocks);
        fns.push_back(m.counts.unsafe_fns);
    }
    s.block_cdf = metrics::cdf_series(std::move(blocks), cap_percent);
    s.fn_cdf = metrics::cdf_series(std::move(fns), cap_percent);
    s.ops = analysis::classify_unsafe_ops(corpus);
    s.abis = analysis::classify_called_abis(corpus, trusted);
    s.vacuous = analysis::find_vacuous_declared_unsafe(corpus);
    return s;
}

std::string metrics_csv(std::span<const metrics::PackageMetrics> packages, const MetricsSummary& s) {
    std::ostringstream os;
    os << "package,blocks,unsafe_fns,unsafe_interfaces,unsafe_impls,fns_total,"
          "fns_possibly_unsafe_conservative,fns_possibly_unsafe_optimistic,direct_deps\n";
    for (const auto& m : packages) {
        os << m.package << ',' << m.counts.blocks << ',' << m.counts.unsafe_fns << ',' << m.counts.unsafe_interfaces
           << ',' << m.counts.unsafe_impls << ',' << m.fns_total << ',' << m.possibly_unsafe_conservative << ','
           << m.possibly_unsafe_optimistic << ',' << m.direct_deps() << '\n';
    }

    const auto& p = s.prevalence;
    os << "# prevalence,any," << percent_or_empty(p.any) << '\n'
       << "# prevalence,blocks," << percent_or_empty(p.blocks) << '\n'
       << "# prevalence,unsafe_fns," << percent_or_empty(p.unsafe_fns) << '\n'
       << "# prevalence,unsafe_interfaces," << percent_or_empty(p.unsafe_interfaces) << '\n'
       << "# prevalence,unsafe_impls," << percent_or_empty(p.unsafe_impls) << '\n';
    os << "# only_safe,conservative," << percent_or_empty(s.only_safe_conservative) << '\n'
       << "# only_safe,optimistic," << percent_or_empty(s.only_safe_optimistic) << '\n';
    os << "# matrix,own_and_deps," << percent_or_empty(s.matrix.own_and_deps) << '\n'
       << "# matrix,own_only," << percent_or_empty(s.matrix.own_only) << '\n'
       << "# matrix,deps_only," << percent_or_empty(s.matrix.deps_only) << '\n'
       << "# matrix,neither," << percent_or_empty(s.matrix.neither) << '\n';
    os << "# mean_direct_deps," << (s.mean_direct_deps.empty() ? "" : s.mean_direct_deps.decimal()) << '\n';
    for (const auto& point : s.block_cdf.points) {
        os << "# cdf,blocks," << point.value << ',' << point.fraction.percent() << '\n';
    }
    for (const auto& point : s.fn_cdf.points) {
        os << "# cdf,unsafe_fns," << point.value << ',' << point.fraction.percent() << '\n';
    }
    for (auto context : analysis::kOpContexts) {
        for (auto kind : kUnsafeOpKinds) {
            os << "# ops," << analysis::to_string(context) << ',' << to_string(kind) << ','
               << s.ops.total.get(context, kind) << '\n';
        }
    }
    for (auto bin : analysis::kAbiBins) {
        os << "# abi," << analysis::to_string(bin) << ',' << s.abis.get(bin) << ','
           << percent_or_empty(s.abis.share(bin)) << '\n';
    }
    for (const auto& id : s.vacuous) {
        os << "# vacuous," << id << '\n';
    }
    return os.str();
}

std::string cdf_csv(const metrics::CdfSeries& series) {
    std::ostringstream os;
    os << "count,cumulative_percent\n";
    for (const auto& point : series.points) {
        os << point.value << ',' << point.fraction.percent() << '\n';
    }
    return os.str();
}

std::string diff_csv(const metrics::SnapshotDiff& diff) {
    std::ostringstream os;
    os << "package,blocks_old,blocks_new,blocks_change,unsafe_fns_old,unsafe_fns_new,unsafe_fns_change\n";
    for (const auto& r : diff.records) {
        os << r.package << ',' << r.blocks.old_count << ',' << r.blocks.new_count << ','
           << metrics::to_string(r.blocks.change) << ',' << r.unsafe_fns.old_count << ',' << r.unsafe_fns.new_count
           << ',' << metrics::to_string(r.unsafe_fns.change) << '\n';
    }
    for (auto change : metrics::kChanges) {
        os << "# summary,blocks," << metrics::to_string(change) << ','
           << percent_or_empty(diff.summary.blocks[static_cast<std::size_t>(change)]) << '\n';
    }
    for (auto change : metrics::kChanges) {
        os << "# summary,unsafe_fns," << metrics::to_string(change) << ','
           << percent_or_empty(diff.summary.unsafe_fns[static_cast<std::size_t>(change)]) << '\n';
    }
    for (const auto& name : diff.only_old) {
        os << "# unmatched,old," << name << '\n';
    }
    for (const auto& name : diff.only_new) {
        os << "# unmatched,new," << name << '\n';
    }
    return os.str();
}

std::string diff_json(const metrics::SnapshotDiff& diff) {
    auto change_json = [](const metrics::CountChange& c) {
        return ordered_json{{"old", c.old_count}, {"new", c.new_count}, {"change", metrics::to_string(c.change)}};
    };
    ordered_json records = ordered_json::array();
    for (const auto& r : diff.records) {
        records.push_back(ordered_json{
            {"package", r.package}, {"blocks", change_json(r.blocks)}, {"unsafe_fns", change_json(r.unsafe_fns)}});
    }
    auto summary_json = [&](const std::array<Ratio, 3>& ratios) {
        ordered_json j = ordered_json::object();
        for (auto change : metrics::kChanges) {
            j[std::string(metrics::to_string(change))] = percent_or_empty(ratios[static_cast<std::size_t>(change)]);
        }
        return j;
    };
    ordered_json out{{"records", std::move(records)},
                     {"summary",
                      ordered_json{{"empty", diff.summary.empty},
                                   {"blocks", summary_json(diff.summary.blocks)},
                                   {"unsafe_fns", summary_json(diff.summary.unsafe_fns)}}},
                     {"unmatched", ordered_json{{"old", diff.only_old}, {"new", diff.only_new}}}};
    return dump(out);
}

} // namespace unsafety::report
