#include "unsafety/cli.hpp"

#include "unsafety/analysis.hpp"
#include "unsafety/frontend.hpp"
#include "unsafety/graph.hpp"
#include "unsafety/metrics.hpp"
#include "unsafety/report.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>

namespace unsafety::cli {

namespace fs = std::filesystem;

namespace {

/// Raised for unreadable inputs and unwritable outputs.
struct IoError {
    std::string message;
};

struct Options {
    std::vector<std::string> inputs;
    std::string old_input;
    std::string new_input;
    std::string mode = "both";
    std::vector<std::string> trusted;
    int depth_cap = 8;
    double cap_percentile = 100.0;
    std::string format;
    std::string out;
    bool early_termination = false;
};

std::vector<frontend::SourceFile> read_sources(const std::vector<std::string>& inputs) {
    std::vector<fs::path> paths;
    for (const auto& input : inputs) {
        fs::path p(input);
        std::error_code ec;
        if (fs::is_directory(p, ec)) {
            std::vector<fs::path> found;
            for (auto it = fs::recursive_directory_iterator(p, ec); !ec && it != fs::recursive_directory_iterator();
                 it.increment(ec)) {
                if (it->is_regular_file() && it->path().extension() == ".ml") {
                    found.push_back(it->path());
                }
            }
            if (ec) {
                throw IoError{input + ": " + ec.message()};
            }
            std::sort(found.begin(), found.end());
            paths.insert(paths.end(), found.begin(), found.end());
        } else if (fs::is_regular_file(p, ec)) {
            paths.push_back(p);
        } else {
            throw IoError{input + ": no such file or directory"};
        }
    }
    std::vector<frontend::SourceFile> files;
    for (const auto& p : paths) {
        std::ifstream in(p, std::ios::binary);
        if (!in) {
            throw IoError{p.string() + ": cannot open file"};
        }
        std::ostringstream text;
        text << in.rdbuf();
        files.push_back(frontend::SourceFile{p.generic_string(), text.str()});
    }
    return files;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os || !(os << content) || !os.flush()) {
        throw IoError{path.string() + ": cannot write file"};
    }
}

/// Writes to --out when given, to `out` otherwise.
void emit(const Options& opts, std::ostream& out, const std::string& content) {
    if (opts.out.empty()) {
        out << content;
    } else {
        write_file(opts.out, content);
    }
}

void print_diagnostics(const std::vector<Diagnostic>& diags, std::ostream& err) {
    for (const auto& d : diags) {
        err << format(d) << '\n';
    }
}

std::optional<Corpus> load(const std::vector<std::string>& inputs, std::ostream& err) {
    std::vector<frontend::SourceFile> files = read_sources(inputs);
    frontend::LoadResult loaded = frontend::load_corpus(files);
    print_diagnostics(loaded.diagnostics, err);
    if (!loaded.ok()) {
        return std::nullopt;
    }
    return std::move(loaded.corpus);
}

graph::BuildOptions build_options(const Options& opts) {
    graph::BuildOptions b;
    b.trusted.insert(opts.trusted.begin(), opts.trusted.end());
    b.depth_cap = opts.depth_cap;
    b.early_termination = opts.early_termination;
    return b;
}

/// Rejects a --format value the subcommand cannot produce. Returns the
/// effective format.
std::optional<std::string> pick_format(const Options& opts, std::initializer_list<std::string_view> supported,
                                       std::ostream& err) {
    std::string format = opts.format.empty() ? std::string(*supported.begin()) : opts.format;
    if (std::find(supported.begin(), supported.end(), format) == supported.end()) {
        err << "--format: '" << format << "' is not supported by this subcommand\n";
        return std::nullopt;
    }
    return format;
}

int cmd_check(const Options& opts, std::ostream&, std::ostream& err) {
    std::vector<frontend::SourceFile> files = read_sources(opts.inputs);
    frontend::LoadResult loaded = frontend::load_corpus(files);
    print_diagnostics(loaded.diagnostics, err);
    err << count(loaded.diagnostics, Severity::Error) << " error(s), " << count(loaded.diagnostics, Severity::Warning)
        << " warning(s)\n";
    return loaded.ok() ? kExitOk : kExitErrors;
}

int cmd_graph(const Options& opts, std::ostream& out, std::ostream& err) {
    if (!pick_format(opts, {"json"}, err)) {
        return kExitUsage;
    }
    std::optional<Corpus> corpus = load(opts.inputs, err);
    if (!corpus) {
        return kExitErrors;
    }
    emit(opts, out, report::graph_json(graph::build_extended_call_graph(*corpus, build_options(opts))));
    return kExitOk;
}

int cmd_analyze(const Options& opts, std::ostream& out, std::ostream& err) {
    std::optional<std::string> format = pick_format(opts, {"csv", "json"}, err);
    if (!format) {
        return kExitUsage;
    }
    std::optional<Corpus> corpus = load(opts.inputs, err);
    if (!corpus) {
        return kExitErrors;
    }
    graph::DualCallGraph g = graph::build_extended_call_graph(*corpus, build_options(opts));
    std::vector<analysis::FunctionVerdict> verdicts = opts.mode == "both"
                                                          ? analysis::analyze_both(*corpus, g)
                                                          : analysis::analyze(*corpus, g, *analysis::parse_mode(opts.mode));
    emit(opts, out, *format == "json" ? report::verdicts_json(verdicts) : report::verdicts_csv(verdicts));
    return kExitOk;
}

int cmd_metrics(const Options& opts, std::ostream& out, std::ostream& err) {
    if (!pick_format(opts, {"csv"}, err)) {
        return kExitUsage;
    }
    std::optional<Corpus> corpus = load(opts.inputs, err);
    if (!corpus) {
        return kExitErrors;
    }
    graph::BuildOptions build = build_options(opts);
    graph::DualCallGraph g = graph::build_extended_call_graph(*corpus, build);
    std::vector<analysis::FunctionVerdict> verdicts = analysis::analyze_both(*corpus, g);
    std::vector<metrics::PackageMetrics> packages = metrics::compute_package_metrics(*corpus, verdicts);
    report::MetricsSummary summary = report::summarize(*corpus, packages, build.trusted, opts.cap_percentile);
    std::string table = report::metrics_csv(packages, summary);

    if (opts.out.empty()) {
        out << table;
        return kExitOk;
    }
    fs::path dir(opts.out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw IoError{opts.out + ": " + ec.message()};
    }
    write_file(dir / "metrics.csv", table);
    write_file(dir / "cdf_blocks.csv", report::cdf_csv(summary.block_cdf));
    write_file(dir / "cdf_unsafe_fns.csv", report::cdf_csv(summary.fn_cdf));
    return kExitOk;
}

int cmd_diff(const Options& opts, std::ostream& out, std::ostream& err) {
    std::optional<std::string> format = pick_format(opts, {"csv", "json"}, err);
    if (!format) {
        return kExitUsage;
    }
    std::optional<Corpus> old_corpus = load({opts.old_input}, err);
    std::optional<Corpus> new_corpus = load({opts.new_input}, err);
    if (!old_corpus || !new_corpus) {
        return kExitErrors;
    }
    metrics::SnapshotDiff diff =
        metrics::snapshot_diff(metrics::compute_counts_only(*old_corpus), metrics::compute_counts_only(*new_corpus));
    emit(opts, out, *format == "json" ? report::diff_json(diff) : report::diff_csv(diff));
    return kExitOk;
}

void add_analysis_flags(CLI::App* sub, Options& opts) {
    sub->add_option("--trusted", opts.trusted, "Comma-separated packages whose bodies are not analyzed")
        ->delimiter(',');
    sub->add_option("--depth-cap", opts.depth_cap, "Maximum generic instantiation depth")
        ->check(CLI::Range(1, std::numeric_limits<int>::max()));
    sub->add_flag("--early-termination", opts.early_termination,
                  "Stop traversing a function body at its first unsafe block");
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Options opts;
    CLI::App app{"Static analysis of unsafe-code propagation across packages", "unsafety"};
    app.require_subcommand(1, 1);

    auto add_inputs = [&](CLI::App* sub) {
        sub->add_option("inputs", opts.inputs, "Directories of .ml files or individual files")->required();
    };
    auto add_output = [&](CLI::App* sub, const char* what) {
        sub->add_option("--format", opts.format, "Output format (json or csv)");
        sub->add_option("--out", opts.out, what);
    };

    CLI::App* check = app.add_subcommand("check", "Parse and report diagnostics");
    add_inputs(check);

    CLI::App* graph_cmd = app.add_subcommand("graph", "Export the extended call graph");
    add_inputs(graph_cmd);
    add_analysis_flags(graph_cmd, opts);
    add_output(graph_cmd, "Output file");

    CLI::App* analyze = app.add_subcommand("analyze", "Label every function safe or possibly unsafe");
    add_inputs(analyze);
    add_analysis_flags(analyze, opts);
    analyze->add_option("--mode", opts.mode, "conservative, optimistic or both")
        ->check(CLI::IsMember({"conservative", "optimistic", "both"}));
    add_output(analyze, "Output file");

    CLI::App* metrics_cmd = app.add_subcommand("metrics", "Compute corpus metrics");
    add_inputs(metrics_cmd);
    add_analysis_flags(metrics_cmd, opts);
    metrics_cmd->add_option("--mode", opts.mode, "Accepted for symmetry; reports always cover both modes")
        ->check(CLI::IsMember({"conservative", "optimistic", "both"}));
    metrics_cmd->add_option("--cap-percentile", opts.cap_percentile, "Cut distributions above this percentile")
        ->check(CLI::Range(0.0, 100.0))
        ->check(CLI::Validator(
            [](std::string& v) { return std::stod(v) > 0.0 ? std::string() : std::string("must be above 0"); },
            "(0,100]"));
    add_output(metrics_cmd, "Output directory");

    CLI::App* diff = app.add_subcommand("diff", "Compare unsafe counts of two snapshots");
    diff->add_option("old", opts.old_input, "Old snapshot")->required();
    diff->add_option("new", opts.new_input, "New snapshot")->required();
    add_output(diff, "Output file");

    if (!args.empty() && !args.front().empty() && args.front().front() != '-' &&
        app.get_subcommand_no_throw(args.front()) == nullptr) {
        err << "unknown subcommand '" << args.front() << "'\nRun with --help for more information.\n";
        return kExitUsage;
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (check->parsed()) {
            return cmd_check(opts, out, err);
        }
        if (graph_cmd->parsed()) {
            return cmd_graph(opts, out, err);
        }
        if (analyze->parsed()) {
            return cmd_analyze(opts, out, err);
        }
        if (metrics_cmd->parsed()) {
            return cmd_metrics(opts, out, err);
        }
        return cmd_diff(opts, out, err);
    } catch (const IoError& e) {
        err << "error[E-IO]: " << e.message << '\n';
        return kExitErrors;
    }
}

} // namespace unsafety::cli
