#pragma once

/// @file metrics.hpp
/// @brief Corpus-level metrics: abstraction prevalence, distributions,
/// only-safe packages, the package/dependency unsafety matrix, dependency
/// counts and snapshot comparisons.
///
/// All percentages are kept as exact ratios; formatting rounds them to one
/// decimal place.

#include "unsafety/analysis.hpp"
#include "unsafety/model.hpp"
#include "unsafety/ratio.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace unsafety::metrics {

struct AbstractionCounts {
    std::uint64_t blocks = 0;
    std::uint64_t unsafe_fns = 0;
    std::uint64_t unsafe_interfaces = 0;
    std::uint64_t unsafe_impls = 0;

    bool any() const { return blocks + unsafe_fns + unsafe_interfaces + unsafe_impls != 0; }

    friend bool operator==(const AbstractionCounts&, const AbstractionCounts&) = default;
};

/// Lexical counts: nested blocks count separately, external declarations
/// count as declared-unsafe functions, generated records are skipped.
AbstractionCounts count_unsafe_abstractions(const PackageUnit& pkg);

struct PackageMetrics {
    std::string package;
    AbstractionCounts counts;
    std::uint64_t fns_total = 0;
    std::uint64_t possibly_unsafe_conservative = 0;
    std::uint64_t possibly_unsafe_optimistic = 0;
    std::vector<std::string> dependencies; ///< direct, as declared

    std::uint64_t possibly_unsafe(analysis::Mode mode) const {
        return mode == analysis::Mode::Conservative ? possibly_unsafe_conservative : possibly_unsafe_optimistic;
    }
    std::uint64_t direct_deps() const { return dependencies.size(); }
};

/// Per-package metrics ordered by package name. `verdicts` may hold either
/// or both modes; a missing mode leaves its column at zero.
std::vector<PackageMetrics> compute_package_metrics(const Corpus& corpus,
                                                    std::span<const analysis::FunctionVerdict> verdicts);

/// Abstraction counts only; taxonomy columns stay zero.
std::vector<PackageMetrics> compute_counts_only(const Corpus& corpus);

struct Prevalence {
    bool empty = true;
    Ratio any;
    Ratio blocks;
    Ratio unsafe_fns;
    Ratio unsafe_interfaces;
    Ratio unsafe_impls;
};

Prevalence abstraction_prevalence(std::span<const PackageMetrics> packages);

struct CdfPoint {
    std::uint64_t value = 0;
    Ratio fraction;
};

struct CdfSeries {
    std::vector<CdfPoint> points;
    double cap_percent = 100.0;
};

/// Cumulative fraction of packages with count <= value for every distinct
/// value, cut before the first point above `cap_percent`. Throws
/// std::invalid_argument unless 0 < cap_percent <= 100.
CdfSeries cdf_series(std::vector<std::uint64_t> counts, double cap_percent = 100.0);

/// Share of packages without a possibly-unsafe function under `mode`.
Ratio only_safe_percentage(std::span<const PackageMetrics> packages, analysis::Mode mode);

struct UnsafetyMatrix {
    bool empty = true;
    Ratio own_and_deps;
    Ratio own_only;
    Ratio deps_only;
    Ratio neither;
};

/// Partitions packages by whether they hold an unsafe abstraction and
/// whether any package in their transitive dependency closure does.
/// Dependencies outside the corpus are ignored.
UnsafetyMatrix dependency_unsafety_matrix(std::span<const PackageMetrics> packages);

/// Mean direct dependency count; empty for an empty corpus.
Ratio mean_direct_dependencies(std::span<const PackageMetrics> packages);

enum class Change { Same, Increase, Decrease };

inline constexpr std::array<Change, 3> kChanges = {Change::Same, Change::Increase, Change::Decrease};

std::string_view to_string(Change change);

struct CountChange {
    std::uint64_t old_count = 0;
    std::uint64_t new_count = 0;
    Change change = Change::Same;
};

struct DiffRecord {
    std::string package;
    CountChange blocks;
    CountChange unsafe_fns;
};

struct DiffSummary {
    bool empty = true;
    std::array<Ratio, 3> blocks;     ///< indexed by Change
    std::array<Ratio, 3> unsafe_fns; ///< indexed by Change
};

struct SnapshotDiff {
    std::vector<DiffRecord> records; ///< matched packages, by name
    std::vector<std::string> only_old;
    std::vector<std::string> only_new;
    DiffSummary summary;
};

SnapshotDiff snapshot_diff(std::span<const PackageMetrics> old_snapshot, std::span<const PackageMetrics> new_snapshot);

} // namespace unsafety::metrics
