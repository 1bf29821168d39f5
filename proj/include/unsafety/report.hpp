#pragma once

/// @file report.hpp
/// @brief Byte-stable JSON and CSV renderings of graphs, verdicts, metrics
/// and snapshot diffs.

#include "unsafety/analysis.hpp"
#include "unsafety/graph.hpp"
#include "unsafety/metrics.hpp"

#include <set>
#include <span>
#include <string>
#include <vector>

namespace unsafety::report {

/// {"nodes": [...], "edges": [...], "meta": {...}}, nodes and edges ordered
/// by key.
std::string graph_json(const graph::DualCallGraph& graph);

std::string verdicts_json(std::span<const analysis::FunctionVerdict> verdicts);
/// Header "id,mode,label,declared_unsafe,vacuous".
std::string verdicts_csv(std::span<const analysis::FunctionVerdict> verdicts);

/// Everything the metrics report contains besides the per-package rows.
struct MetricsSummary {
    metrics::Prevalence prevalence;
    Ratio only_safe_conservative;
    Ratio only_safe_optimistic;
    metrics::UnsafetyMatrix matrix;
    Ratio mean_direct_deps;
    metrics::CdfSeries block_cdf;
    metrics::CdfSeries fn_cdf;
    analysis::OpCensus ops;
    analysis::AbiCensus abis;
    std::vector<std::string> vacuous;
};

MetricsSummary summarize(const Corpus& corpus, std::span<const metrics::PackageMetrics> packages,
                         const std::set<std::string>& trusted, double cap_percent);

/// Per-package rows followed by "#"-prefixed summary rows.
std::string metrics_csv(std::span<const metrics::PackageMetrics> packages, const MetricsSummary& summary);

/// Header "count,cumulative_percent".
std::string cdf_csv(const metrics::CdfSeries& series);

std::string diff_csv(const metrics::SnapshotDiff& diff);
std::string diff_json(const metrics::SnapshotDiff& diff);

} // namespace unsafety::report
