// rcakit command-line entry point.
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rcakit/datagen.hpp"
#include "rcakit/deadline.hpp"
#include "rcakit/eval.hpp"
#include "rcakit/io.hpp"
#include "rcakit/rca.hpp"
#include "rcakit/seed.hpp"

namespace fs = std::filesystem;
using namespace rcakit;

namespace {

struct Globals {
    std::uint64_t seed = 0;
    double timeout_s = 120.0;
    std::size_t jobs = 1;
    std::string format = "csv";
    std::string name_map;
};

/// Prefixes an error with the file or flag it concerns, keeping its kind.
[[noreturn]] void rethrow_with(const std::string& where, const Error& e) {
    std::string what = e.what();
    if (what.find(where) != std::string::npos) throw e;
    fail(e.kind(), where + ": " + what);
}

std::optional<NameMap> load_name_map(const Globals& g) {
    if (g.name_map.empty()) return std::nullopt;
    return parse_name_map(read_file(g.name_map), g.name_map);
}

LoadedCase open_case(const std::string& dir, const Globals& g) {
    auto map = load_name_map(g);
    return load_case(dir, map ? &*map : nullptr);
}

ReportFormat report_format(const Globals& g) {
    auto f = parse_report_format(g.format);
    if (!f) fail(ErrorKind::config, "--format: expected csv or markdown, got " + g.format);
    return *f;
}

void emit(const std::string& text, const std::string& out) {
    if (out.empty()) {
        std::cout << text;
    } else {
        write_file_atomic(out, text);
    }
}

ScopedDeadline deadline_for(const Globals& g) {
    return ScopedDeadline(Clock::now() + std::chrono::duration_cast<Clock::duration>(
                                             std::chrono::duration<double>(g.timeout_s)));
}

struct GenArgs {
    std::string generator = "var";
    std::size_t nodes = 10;
    std::size_t edges = 20;
    std::size_t length = 200;
    std::size_t cases = 1;
    std::optional<std::size_t> inject_index;
    std::size_t duration = 2;
    double magnitude = 10.0;
    bool no_fault = false;
    std::string out;
};

void run_gen(const GenArgs& a, const Globals& g) {
    SuiteDataset spec;
    spec.name = "gen";
    if (a.generator == "var") {
        spec.source = SuiteSource::var;
    } else if (a.generator == "discrete") {
        spec.source = SuiteSource::discrete;
    } else {
        fail(ErrorKind::config, "--generator: expected var or discrete, got " + a.generator);
    }
    spec.nodes = a.nodes;
    spec.edges = a.edges;
    spec.length = a.length;
    spec.cases = a.cases;
    spec.inject_index = a.inject_index;
    spec.fault_duration = a.duration;
    spec.magnitude = a.magnitude;
    spec.inject_fault = !a.no_fault;
    const int width = std::max<int>(3, static_cast<int>(std::to_string(a.cases).size()));
    for (std::size_t c = 0; c < a.cases; ++c) {
        std::uint64_t seed = derive_seed(g.seed, {c});
        GeneratedCase gc = generate_case(spec, seed);
        char name[32];
        std::snprintf(name, sizeof name, "case_%0*zu", width, c);
        write_case(fs::path(a.out) / name, gc.data, gc.meta, gc.truth ? &*gc.truth : nullptr);
    }
    std::cout << "wrote " << a.cases << " case(s) to " << a.out << "\n";
}

struct DiscoverArgs {
    std::string method;
    std::string case_dir;
    std::string config;
    std::optional<double> alpha;
    std::optional<std::size_t> max_cond;
    std::optional<std::size_t> max_lag;
    std::optional<double> penalty;
    std::string out;
};

DiscoveryConfig discovery_config(const std::string& file, const std::optional<double>& alpha,
                                 const std::optional<std::size_t>& max_cond,
                                 const std::optional<std::size_t>& max_lag,
                                 const std::optional<double>& penalty) {
    DiscoveryConfig cfg;
    if (!file.empty()) cfg = parse_config(read_file(file), file);
    if (alpha) cfg.alpha = *alpha;
    if (max_cond) cfg.max_cond_size = *max_cond;
    if (max_lag) cfg.max_lag = *max_lag;
    if (penalty) cfg.penalty = *penalty;
    cfg.validate();
    return cfg;
}

void run_discover(const DiscoverArgs& a, const Globals& g) {
    if (!is_discovery_method(a.method)) fail(ErrorKind::config, "--method: unknown discovery method " + a.method);
    auto cfg = discovery_config(a.config, a.alpha, a.max_cond, a.max_lag, a.penalty);
    LoadedCase lc = open_case(a.case_dir, g);
    Warnings warnings;
    auto guard = deadline_for(g);
    CausalGraph graph = [&] {
        try {
            return discover(a.method, lc.data, cfg, &warnings);
        } catch (const Error& e) {
            rethrow_with(a.case_dir, e);
        }
    }();
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
    emit(format_edges(graph), a.out);
    if (lc.truth) {
        auto d = graph_f1(graph, *lc.truth, GraphMode::directed);
        auto s = graph_f1(graph, *lc.truth, GraphMode::skeleton);
        std::fprintf(stderr, "precision=%.2f recall=%.2f F1=%.2f F1-S=%.2f SHD=%d\n", d.precision, d.recall,
                     d.f1, s.f1, shd(graph, *lc.truth));
    }
}

struct RcaArgs {
    std::string method;
    std::string case_dir;
    std::optional<double> delta_s;
    std::string graph;
    std::string config;
    std::size_t chunk_size = 5;
    std::string out;
};

void run_rca_cmd(const RcaArgs& a, const Globals& g) {
    if (!is_rca_method(a.method)) fail(ErrorKind::config, "--method: unknown rca method " + a.method);
    LoadedCase lc = open_case(a.case_dir, g);
    if (a.delta_s) lc.meta.delta_s = *a.delta_s;
    RcaOptions opts;
    opts.seed = g.seed;
    opts.rcd_chunk_size = a.chunk_size;
    if (!a.config.empty()) opts.discovery = parse_config(read_file(a.config), a.config);
    std::optional<CausalGraph> user_graph;
    if (!a.graph.empty()) {
        user_graph = parse_edges(read_file(a.graph), lc.data.metric_names(), a.graph);
        opts.graph = &*user_graph;
    }
    auto guard = deadline_for(g);
    RcaResult r = [&] {
        try {
            return run_rca(a.method, lc.data, lc.meta, opts);
        } catch (const Error& e) {
            rethrow_with(a.case_dir, e);
        }
    }();
    for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
    if (r.estimated_inject) std::cerr << "estimated inject row: " << *r.estimated_inject << "\n";
    emit(format_ranking(r.ranking), a.out);
}

struct TuneArgs {
    std::string method;
    std::string case_dir;
    std::string grid;
    std::string out;
};

void run_tune(const TuneArgs& a, const Globals& g) {
    auto grid = parse_grid(read_file(a.grid), a.grid);
    LoadedCase lc = open_case(a.case_dir, g);
    auto guard = deadline_for(g);
    TuneResult t = [&] {
        try {
            return tune_bic_detailed(a.method, lc.data, grid);
        } catch (const Error& e) {
            rethrow_with(a.case_dir, e);
        }
    }();
    for (std::size_t i = 0; i < t.scores.size(); ++i) {
        if (t.scores[i]) {
            std::cerr << "grid " << i << ": BIC " << format_double(*t.scores[i]) << "\n";
        }
    }
    for (const auto& f : t.failures) std::cerr << "warning: " << f << "\n";
    emit(format_config(t.best), a.out);
}

struct BenchArgs {
    std::string suite;
    std::string out;
};

void run_bench(const BenchArgs& a, const Globals& g) {
    SuiteConfig cfg = parse_suite(read_file(a.suite), a.suite);
    cfg.timeout_s = g.timeout_s;
    cfg.jobs = g.jobs;
    auto format = report_format(g);
    EvalReport report = [&] {
        try {
            return run_suite(cfg, g.seed);
        } catch (const Error& e) {
            rethrow_with(a.suite, e);
        }
    }();
    for (const auto& row : report.rows) {
        if (row.timeouts + row.errors > 0) {
            std::cerr << "note: " << row.method << " on " << row.dataset << ": " << row.timeouts
                      << " timeout(s), " << row.errors << " error(s)\n";
        }
    }
    emit(emit_report(report, format), a.out);
}

struct EvalArgs {
    std::string cases;
    std::string rankings;
    std::string method = "rankings";
    bool metric_level = false;
    std::string out;
};

void run_eval(const EvalArgs& a, const Globals& g) {
    auto format = report_format(g);
    std::vector<fs::path> dirs;
    for (const auto& entry : fs::directory_iterator(a.cases)) {
        if (entry.is_directory() && fs::exists(entry.path() / "meta.json")) dirs.push_back(entry.path());
    }
    std::sort(dirs.begin(), dirs.end());
    if (dirs.empty()) fail(ErrorKind::input, a.cases + ": no case directories");
    std::vector<RankedCase> cases;
    for (const auto& dir : dirs) {
        LoadedCase lc = open_case(dir.string(), g);
        fs::path rank_path = fs::path(a.rankings) / (dir.filename().string() + ".csv");
        if (!fs::exists(rank_path)) fail(ErrorKind::format, "missing " + rank_path.string());
        Ranking r = parse_ranking(read_file(rank_path), rank_path.string());
        std::vector<std::string> roots = lc.meta.root_cause_metrics;
        if (lc.meta.root_cause_service && !a.metric_level) {
            roots = {*lc.meta.root_cause_service};
            r = r.by_service();
        }
        if (roots.empty()) fail(ErrorKind::input, dir.string() + ": no root cause recorded");
        cases.push_back({std::move(r), std::move(roots)});
    }
    ReportRow row;
    row.method = a.method;
    fs::path cases_dir(a.cases);
    if (cases_dir.filename().empty()) cases_dir = cases_dir.parent_path();
    row.dataset = cases_dir.filename().string();
    row.fault_type = "ALL";
    row.cases = cases.size();
    for (std::size_t k = 0; k < 5; ++k) row.ac[k] = ac_at_k(cases, k + 1);
    row.avg5 = avg_at_k(cases, 5);
    emit(emit_report(EvalReport{{row}}, format), a.out);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Causal discovery and root cause analysis toolkit"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--seed", g.seed, "Master seed");
    app.add_option("--timeout-s", g.timeout_s, "Per-call time limit in seconds")->check(CLI::PositiveNumber);
    app.add_option("--jobs", g.jobs, "Concurrent cases for bench")->check(CLI::PositiveNumber);
    app.add_option("--format", g.format, "Report format: csv or markdown");
    app.add_option("--name-map", g.name_map, "JSON object mapping raw CSV headers to metric names");

    GenArgs gen;
    auto* gen_cmd = app.add_subcommand("gen", "Generate synthetic cases");
    gen_cmd->add_option("--generator", gen.generator, "var or discrete");
    gen_cmd->add_option("--nodes", gen.nodes);
    gen_cmd->add_option("--edges", gen.edges, "Edge count (var only)");
    gen_cmd->add_option("--length", gen.length);
    gen_cmd->add_option("--cases", gen.cases, "Number of cases (one fault each)");
    gen_cmd->add_option("--inject-index", gen.inject_index, "Fault row (default length/2)");
    gen_cmd->add_option("--duration", gen.duration, "Fault duration in rows");
    gen_cmd->add_option("--magnitude", gen.magnitude, "Fault size in stationary standard deviations");
    gen_cmd->add_flag("--no-fault", gen.no_fault, "Write fault-free data");
    gen_cmd->add_option("--out", gen.out, "Output directory")->required();

    DiscoverArgs disc;
    auto* disc_cmd = app.add_subcommand("discover", "Learn a causal graph from one case");
    disc_cmd->add_option("--method", disc.method, "pc, fci, granger, lingam or ges")->required();
    disc_cmd->add_option("--case", disc.case_dir, "Case directory")->required();
    disc_cmd->add_option("--config", disc.config, "Discovery config JSON");
    disc_cmd->add_option("--alpha", disc.alpha);
    disc_cmd->add_option("--max-cond", disc.max_cond);
    disc_cmd->add_option("--max-lag", disc.max_lag);
    disc_cmd->add_option("--penalty", disc.penalty);
    disc_cmd->add_option("--out", disc.out, "graph.edges output (stdout if absent)");

    RcaArgs rca;
    auto* rca_cmd = app.add_subcommand("rca", "Rank root-cause candidates for one case");
    rca_cmd->add_option("--method", rca.method)->required();
    rca_cmd->add_option("--case", rca.case_dir, "Case directory")->required();
    rca_cmd->add_option("--delta-s", rca.delta_s, "Override the failure-time offset");
    rca_cmd->add_option("--graph", rca.graph, "User graph for circa");
    rca_cmd->add_option("--config", rca.config, "Discovery config JSON for pipelines");
    rca_cmd->add_option("--chunk-size", rca.chunk_size, "rcd chunk size");
    rca_cmd->add_option("--out", rca.out, "Ranking CSV output (stdout if absent)");

    TuneArgs tune;
    auto* tune_cmd = app.add_subcommand("tune", "Pick a discovery config by held-out BIC");
    tune_cmd->add_option("--method", tune.method)->required();
    tune_cmd->add_option("--case", tune.case_dir)->required();
    tune_cmd->add_option("--grid", tune.grid, "JSON array of configs")->required();
    tune_cmd->add_option("--out", tune.out);

    BenchArgs bench;
    auto* bench_cmd = app.add_subcommand("bench", "Run a JSON suite and print the report");
    bench_cmd->add_option("--suite", bench.suite)->required();
    bench_cmd->add_option("--out", bench.out);

    EvalArgs ev;
    auto* eval_cmd = app.add_subcommand("eval", "Score saved rankings against case truths");
    eval_cmd->add_option("--cases", ev.cases, "Directory of case directories")->required();
    eval_cmd->add_option("--rankings", ev.rankings, "Directory of <case>.csv rankings")->required();
    eval_cmd->add_option("--method", ev.method, "Label for the report row");
    eval_cmd->add_flag("--metric-level", ev.metric_level, "Score metrics instead of services");
    eval_cmd->add_option("--out", ev.out);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*gen_cmd) run_gen(gen, g);
        if (*disc_cmd) run_discover(disc, g);
        if (*rca_cmd) run_rca_cmd(rca, g);
        if (*tune_cmd) run_tune(tune, g);
        if (*bench_cmd) run_bench(bench, g);
        if (*eval_cmd) run_eval(ev, g);
    } catch (const Error& e) {
        std::cerr << "error [" << to_string(e.kind()) << "]: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error [internal]: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
