#include "unsafety/metrics.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>

namespace unsafety::metrics {

AbstractionCounts count_unsafe_abstractions(const PackageUnit& pkg) {
    AbstractionCounts c;
    for (const auto& fn : pkg.functions) {
        if (fn.generated) {
            continue;
        }
        if (fn.declared_unsafe) {
            ++c.unsafe_fns;
        }
        walk_statements(fn.body, [&](const Statement& stmt, int) {
            if (std::holds_alternative<UnsafeBlock>(stmt.node)) {
                ++c.blocks;
            }
        });
    }
    for (const auto& iface : pkg.interfaces) {
        if (iface.declared_unsafe) {
            ++c.unsafe_interfaces;
        }
    }
    for (const auto& impl : pkg.impls) {
        if (impl.declared_unsafe && !impl.generated) {
            ++c.unsafe_impls;
        }
    }
    return c;
}

std::vector<PackageMetrics> compute_counts_only(const Corpus& corpus) {
    std::vector<PackageMetrics> out;
    out.reserve(corpus.packages.size());
    for (const auto& pkg : corpus.packages) {
        PackageMetrics m;
        m.package = pkg.name;
        m.counts = count_unsafe_abstractions(pkg);
        m.dependencies = pkg.dependencies;
        out.push_back(std::move(m));
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.package < b.package; });
    return out;
}

std::vector<PackageMetrics> compute_package_metrics(const Corpus& corpus,
                                                    std::span<const analysis::FunctionVerdict> verdicts) {
    std::vector<PackageMetrics> out = compute_counts_only(corpus);
    std::map<std::string, PackageMetrics*> by_name;
    for (auto& m : out) {
        by_name.emplace(m.package, &m);
    }
    for (const auto& pkg : corpus.packages) {
        by_name.at(pkg.name)->fns_total = pkg.functions.size();
    }
    for (const auto& v : verdicts) {
        auto it = by_name.find(v.package);
        if (it == by_name.end() || v.label != analysis::Label::PossiblyUnsafe) {
            continue;
        }
        if (v.mode == analysis::Mode::Conservative) {
            ++it->second->possibly_unsafe_conservative;
        } else {
            ++it->second->possibly_unsafe_optimistic;
        }
    }
    return out;
}

Prevalence abstraction_prevalence(std::span<const PackageMetrics> packages) {
    Prevalence p;
    p.empty = packages.empty();
    std::uint64_t n = packages.size();
    p.any.den = p.blocks.den = p.unsafe_fns.den = p.unsafe_interfaces.den = p.unsafe_impls.den = n;
    for (const auto& m : packages) {
        p.any.num += m.counts.any() ? 1 : 0;
        p.blocks.num += m.counts.blocks != 0 ? 1 : 0;
        p.unsafe_fns.num += m.counts.unsafe_fns != 0 ? 1 : 0;
        p.unsafe_interfaces.num += m.counts.unsafe_interfaces != 0 ? 1 : 0;
        p.unsafe_impls.num += m.counts.unsafe_impls != 0 ? 1 : 0;
    }
    return p;
}

CdfSeries cdf_series(std::vector<std::uint64_t> counts, double cap_percent) {
    if (!(cap_percent > 0.0 && cap_percent <= 100.0)) {
        throw std::invalid_argument("cap percentile must lie in (0, 100]");
    }
    CdfSeries series;
    series.cap_percent = cap_percent;
    std::sort(counts.begin(), counts.end());
    const std::uint64_t n = counts.size();
    for (std::size_t i = 0; i < counts.size(); ++i) {
        if (i + 1 < counts.size() && counts[i + 1] == counts[i]) {
            continue;
        }
        Ratio fraction{i + 1, n};
        if (static_cast<long double>(fraction.num) * 100.0L > static_cast<long double>(cap_percent) * n) {
            break;
        }
        series.points.push_back(CdfPoint{counts[i], fraction});
    }
    return series;
}

Ratio only_safe_percentage(std::span<const PackageMetrics> packages, analysis::Mode mode) {
    Ratio r{0, packages.size()};
    for (const auto& m : packages) {
        r.num += m.possibly_unsafe(mode) == 0 ? 1 : 0;
    }
    return r;
}

UnsafetyMatrix dependency_unsafety_matrix(std::span<const PackageMetrics> packages) {
    std::map<std::string, const PackageMetrics*> by_name;
    for (const auto& m : packages) {
        by_name.emplace(m.package, &m);
    }

    // closure_unsafe[p]: some package reachable from p through one or more
    // dependency edges holds an unsafe abstraction.
    std::map<std::string, bool> closure_unsafe;
    std::set<std::string> in_progress;
    auto visit = [&](auto&& self, const std::string& name) -> bool {
        if (auto it = closure_unsafe.find(name); it != closure_unsafe.end()) {
            return it->second;
        }
        if (!in_progress.insert(name).second) {
            return false;
        }
        bool unsafe = false;
        for (const auto& dep : by_name.at(name)->dependencies) {
            auto it = by_name.find(dep);
            if (it == by_name.end()) {
                continue;
            }
            bool dep_closure = self(self, dep);
            unsafe = unsafe || it->second->counts.any() || dep_closure;
        }
        in_progress.erase(name);
        closure_unsafe[name] = unsafe;
        return unsafe;
    };

    UnsafetyMatrix matrix;
    matrix.empty = packages.empty();
    const std::uint64_t n = packages.size();
    matrix.own_and_deps.den = matrix.own_only.den = matrix.deps_only.den = matrix.neither.den = n;
    for (const auto& m : packages) {
        bool own = m.counts.any();
        bool deps = visit(visit, m.package);
        Ratio& cell = own ? (deps ? matrix.own_and_deps : matrix.own_only) : (deps ? matrix.deps_only : matrix.neither);
        ++cell.num;
    }
    return matrix;
}

Ratio mean_direct_dependencies(std::span<const PackageMetrics> packages) {
    Ratio r{0, packages.size()};
    for (const auto& m : packages) {
        r.num += m.direct_deps();
    }
    return r;
}

std::string_view to_string(Change change) {
    switch (change) {
    case Change::Same:
        return "same";
    case Change::Increase:
        return "increase";
    case Change::Decrease:
        return "decrease";
    }
    return "?";
}

namespace {

CountChange compare(std::uint64_t old_count, std::uint64_t new_count) {
    Change change = old_count == new_count ? Change::Same
                    : new_count > old_count ? Change::Increase
                                            : Change::Decrease;
    return CountChange{old_count, new_count, change};
}

} // namespace

SnapshotDiff snapshot_diff(std::span<const PackageMetrics> old_snapshot, std::span<const PackageMetrics> new_snapshot) {
    std::map<std::string, const PackageMetrics*> old_by_name;
    std::map<std::string, const PackageMetrics*> new_by_name;
    for (const auto& m : old_snapshot) {
        old_by_name.emplace(m.package, &m);
    }
    for (const auto& m : new_snapshot) {
        new_by_name.emplace(m.package, &m);
    }

    SnapshotDiff diff;
    for (const auto& [name, old_m] : old_by_name) {
        auto it = new_by_name.find(name);
        if (it == new_by_name.end()) {
            diff.only_old.push_back(name);
            continue;
        }
        const PackageMetrics* new_m = it->second;
        diff.records.push_back(DiffRecord{name, compare(old_m->counts.blocks, new_m->counts.blocks),
                                          compare(old_m->counts.unsafe_fns, new_m->counts.unsafe_fns)});
    }
    for (const auto& [name, m] : new_by_name) {
        if (old_by_name.count(name) == 0) {
            diff.only_new.push_back(name);
        }
    }

    const std::uint64_t matched = diff.records.size();
    diff.summary.empty = matched == 0;
    for (std::size_t i = 0; i < kChanges.size(); ++i) {
        diff.summary.blocks[i] = Ratio{0, matched};
        diff.summary.unsafe_fns[i] = Ratio{0, matched};
    }
    for (const auto& r : diff.records) {
        ++diff.summary.blocks[static_cast<std::size_t>(r.blocks.change)].num;
        ++diff.summary.unsafe_fns[static_cast<std::size_t>(r.unsafe_fns.change)].num;
    }
    return diff;
}

} // namespace unsafety::metrics
