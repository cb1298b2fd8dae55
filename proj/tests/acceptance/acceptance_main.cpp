// Acceptance run: one PASS/FAIL line per criterion, exit 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "rcakit/citest.hpp"
#include "rcakit/datagen.hpp"
#include "rcakit/discovery.hpp"
#include "rcakit/eval.hpp"
#include "rcakit/io.hpp"
#include "rcakit/rca.hpp"
#include "rcakit/scoring.hpp"
#include "rcakit/seed.hpp"

using namespace rcakit;

namespace {

constexpr std::uint64_t k_master = 0x5eed2024;

int failures = 0;

void report(int id, bool pass, const std::string& what) {
    std::printf("%s criterion %d: %s\n", pass ? "PASS" : "FAIL", id, what.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct DiscoveryRun {
    double f1 = 0.0;
    double f1_s = 0.0;
    double shd = 0.0;
    double seconds = 0.0;
};

// Every discovery run in this file lands here for criterion 3.
std::vector<std::pair<double, double>> all_f1_pairs;

DiscoveryRun run_discovery(const std::string& method, const Dataset& data, const CausalGraph& truth) {
    auto t0 = std::chrono::steady_clock::now();
    CausalGraph g = discover(method, data, DiscoveryConfig{});
    DiscoveryRun r;
    r.seconds = seconds_since(t0);
    r.f1 = graph_f1(g, truth, GraphMode::directed).f1;
    r.f1_s = graph_f1(g, truth, GraphMode::skeleton).f1;
    r.shd = shd(g, truth);
    all_f1_pairs.emplace_back(r.f1, r.f1_s);
    return r;
}

SuiteDataset var_spec(std::size_t nodes, std::size_t edges, std::size_t length, bool fault) {
    SuiteDataset d;
    d.name = "var" + std::to_string(nodes);
    d.source = SuiteSource::var;
    d.nodes = nodes;
    d.edges = edges;
    d.length = length;
    d.inject_fault = fault;
    return d;
}

SuiteDataset discrete_spec(std::size_t nodes, std::size_t length, bool fault) {
    SuiteDataset d;
    d.name = "rcd" + std::to_string(nodes);
    d.source = SuiteSource::discrete;
    d.nodes = nodes;
    d.length = length;
    d.inject_fault = fault;
    return d;
}

const ReportRow& find_row(const EvalReport& r, const std::string& method, const std::string& dataset) {
    for (const auto& row : r.rows) {
        if (row.method == method && row.dataset == dataset) return row;
    }
    fail(ErrorKind::reference, "no report row " + method + " / " + dataset);
}

void criterion_1() {
    SuiteConfig cfg;
    cfg.methods = {"dummy"};
    auto d10 = var_spec(10, 20, 200, true);
    d10.cases = 200;
    auto d50 = var_spec(50, 100, 200, true);
    d50.cases = 200;
    cfg.datasets = {d10, d50};
    EvalReport r = run_suite(cfg, derive_seed(k_master, {1}));
    double a10 = find_row(r, "dummy", "var10").avg5;
    double a50 = find_row(r, "dummy", "var50").avg5;
    bool pass = std::abs(a10 - 0.30) <= 0.02 && std::abs(a50 - 0.06) <= 0.01;
    report(1, pass, "dummy Avg@5 10-node " + fmt("%.3f", a10) + " (0.30+-0.02), 50-node " + fmt("%.3f", a50) +
                        " (0.06+-0.01)");
}

// Shared by criteria 2 and 8.
std::map<std::string, std::pair<std::vector<DiscoveryRun>, std::vector<DiscoveryRun>>> size_runs;

void criterion_2_and_8() {
    const std::vector<std::string> methods{"pc", "fci", "granger", "ges"};
    for (std::size_t i = 0; i < 10; ++i) {
        auto small = generate_case(var_spec(10, 20, 4000, false), derive_seed(k_master, {2, 10, i}));
        auto large = generate_case(var_spec(50, 100, 4000, false), derive_seed(k_master, {2, 50, i}));
        for (const auto& m : methods) {
            size_runs[m].first.push_back(run_discovery(m, small.data, *small.truth));
            size_runs[m].second.push_back(run_discovery(m, large.data, *large.truth));
        }
    }
    auto mean = [](const std::vector<DiscoveryRun>& v, auto field) {
        double s = 0.0;
        for (const auto& r : v) s += field(r);
        return s / static_cast<double>(v.size());
    };
    bool all = true;
    std::string detail;
    for (const auto& m : methods) {
        double f10 = mean(size_runs[m].first, [](const DiscoveryRun& r) { return r.f1; });
        double f50 = mean(size_runs[m].second, [](const DiscoveryRun& r) { return r.f1; });
        bool ok = f50 < f10;
        all = all && ok;
        detail += " " + m + " " + fmt("%.3f", f10) + "->" + fmt("%.3f", f50) + (ok ? "" : "(!)");
    }
    report(2, all, "directed F1 10-node -> 50-node strictly lower:" + detail);

    std::map<std::string, double> t;
    for (const auto& m : methods) {
        t[m] = mean(size_runs[m].second, [](const DiscoveryRun& r) { return r.seconds; });
    }
    bool ges_slowest = t["ges"] > t["pc"] && t["ges"] > t["fci"] && t["ges"] > t["granger"];
    bool pass = t["pc"] < t["granger"] && ges_slowest;
    std::string times;
    for (const auto& m : methods) times += " " + m + "=" + fmt("%.3fs", t[m]);
    report(8, pass, "50-node T=4000 mean runtimes" + times + " (need pc < granger, ges slowest)");
}

void criterion_4() {
    double f1 = 0.0, shd_sum = 0.0;
    for (std::size_t i = 0; i < 10; ++i) {
        auto c = generate_case(var_spec(10, 20, 4000, false), derive_seed(k_master, {4, i}));
        auto r = run_discovery("pc", c.data, *c.truth);
        f1 += r.f1 / 10.0;
        shd_sum += r.shd / 10.0;
    }
    bool pass = f1 >= 0.34 && f1 <= 0.64 && shd_sum <= 26.0;
    report(4, pass, "pc 10-node/20-edge T=4000 mean F1 " + fmt("%.3f", f1) + " in [0.34, 0.64], mean SHD " +
                        fmt("%.1f", shd_sum) + " <= 26");
}

void criterion_5() {
    SuiteConfig cfg;
    cfg.methods = {"nsigma", "baro"};
    auto d = var_spec(10, 20, 200, true);
    d.cases = 100;
    d.inject_index = 100;
    d.fault_duration = 2;
    cfg.datasets = {d};
    // One-second rows: a 2 s offset puts the split right after the anomalous rows.
    cfg.delta_s = {0.0, 2.0};
    EvalReport r = run_suite(cfg, derive_seed(k_master, {5}));
    double ns0 = find_row(r, "nsigma", "var10@dt=0").avg5;
    double ns2 = find_row(r, "nsigma", "var10@dt=2").avg5;
    double b0 = find_row(r, "baro", "var10@dt=0").avg5;
    double b2 = find_row(r, "baro", "var10@dt=2").avg5;
    double ns_drop = ns0 - ns2;
    double b_drop = b0 - b2;
    bool pass = ns0 >= 0.75 && ns_drop >= 0.4 && b_drop <= ns_drop;
    report(5, pass, "nsigma Avg@5 " + fmt("%.3f", ns0) + " -> " + fmt("%.3f", ns2) + " (drop " +
                        fmt("%.3f", ns_drop) + " >= 0.4), baro " + fmt("%.3f", b0) + " -> " + fmt("%.3f", b2) +
                        " (drop " + fmt("%.3f", b_drop) + " <= nsigma drop)");
}

void criterion_6() {
    SuiteConfig cfg;
    cfg.methods = {"rcd"};
    auto d = discrete_spec(10, 4000, true);
    d.cases = 100;
    cfg.datasets = {d};
    EvalReport r = run_suite(cfg, derive_seed(k_master, {6}));
    const auto& row = find_row(r, "rcd", "rcd10");
    report(6, row.avg5 >= 0.6, "rcd on 100 discrete 10-node cases Avg@5 " + fmt("%.3f", row.avg5) + " >= 0.6");
}

void criterion_7() {
    double short_f1 = 0.0, long_f1 = 0.0;
    const std::size_t n = 10;
    for (std::size_t i = 0; i < n; ++i) {
        auto c = generate_case(discrete_spec(10, 4000, false), derive_seed(k_master, {7, i}));
        Dataset head = c.data.slice_rows(0, 125);
        short_f1 += run_discovery("fci", head, *c.truth).f1 / static_cast<double>(n);
        long_f1 += run_discovery("fci", c.data, *c.truth).f1 / static_cast<double>(n);
    }
    report(7, long_f1 - short_f1 >= 0.15, "fci discrete 10-node F1 T=125 " + fmt("%.3f", short_f1) + " -> T=4000 " +
                                              fmt("%.3f", long_f1) + " (gain >= 0.15)");
}

void criterion_3() {
    std::size_t violations = 0;
    for (auto [f1, f1s] : all_f1_pairs) {
        if (f1 > f1s + 1e-12) ++violations;
    }
    report(3, violations == 0, "F1 <= F1-S on " + std::to_string(all_f1_pairs.size()) + " discovery runs, " +
                                   std::to_string(violations) + " violations");
}

// ---- criterion 9: property suites -------------------------------------------

Dataset make_continuous(const std::vector<std::string>& names, const Eigen::MatrixXd& v) {
    return Dataset(names, v, 1.0, DataKind::continuous);
}

std::string calibration() {
    std::mt19937_64 rng(derive_seed(k_master, {9, 1}));
    std::normal_distribution<double> normal;
    std::uniform_int_distribution<int> die(0, 5);
    const int trials = 1000;
    int fz = 0, g2 = 0;
    for (int t = 0; t < trials; ++t) {
        Eigen::MatrixXd c(200, 3);
        Eigen::MatrixXd d(500, 3);
        for (Eigen::Index i = 0; i < c.rows(); ++i) {
            for (Eigen::Index j = 0; j < 3; ++j) c(i, j) = normal(rng);
        }
        for (Eigen::Index i = 0; i < d.rows(); ++i) {
            for (Eigen::Index j = 0; j < 3; ++j) d(i, j) = die(rng) % 3;
        }
        auto cz = fisher_z(make_continuous({"a", "b", "c"}, c), 0, 1, {2}, 0.05);
        auto dz = g_square(Dataset({"a", "b", "c"}, d, 1.0, DataKind::discrete), 0, 1, {2}, 0.05);
        fz += !cz.independent;
        g2 += !dz.independent;
    }
    double rf = fz / static_cast<double>(trials);
    double rg = g2 / static_cast<double>(trials);
    if (std::abs(rf - 0.05) > 0.03 || std::abs(rg - 0.05) > 0.03) {
        return "type-I rates fisher_z " + fmt("%.3f", rf) + ", g_square " + fmt("%.3f", rg);
    }
    return {};
}

std::string pc_recovery() {
    std::mt19937_64 rng(derive_seed(k_master, {9, 2}));
    std::normal_distribution<double> normal;
    const Eigen::Index T = 10000;
    Eigen::MatrixXd chain(T, 3), coll(T, 3);
    for (Eigen::Index i = 0; i < T; ++i) {
        double a = normal(rng);
        double b = 0.8 * a + normal(rng);
        chain.row(i) << a, b, 0.8 * b + normal(rng);
        double x = normal(rng), y = normal(rng);
        coll.row(i) << x, y, 0.8 * x + 0.8 * y + normal(rng);
    }
    CausalGraph gc = pc(make_continuous({"A", "B", "C"}, chain), DiscoveryConfig{});
    CausalGraph want_chain({"A", "B", "C"});
    want_chain.add_edge("A", "B", EdgeMark::undirected);
    want_chain.add_edge("B", "C", EdgeMark::undirected);
    if (!(gc == want_chain)) return "chain not recovered as A--B--C";
    CausalGraph gk = pc(make_continuous({"X", "Y", "Z"}, coll), DiscoveryConfig{});
    CausalGraph want_coll({"X", "Y", "Z"});
    want_coll.add_edge("X", "Z");
    want_coll.add_edge("Y", "Z");
    if (!(gk == want_coll)) return "collider not recovered as X->Z<-Y";
    return {};
}

// Best BIC over all 25 DAGs on 3 labelled nodes; returns its CPDAG.
CausalGraph exhaustive_optimum(const Dataset& data) {
    const std::vector<std::pair<std::size_t, std::size_t>> pairs{{0, 1}, {0, 2}, {1, 2}};
    std::optional<CausalGraph> best;
    double best_score = 0.0;
    for (int code = 0; code < 27; ++code) {
        CausalGraph g(data.metric_names());
        int c = code;
        for (auto [a, b] : pairs) {
            int state = c % 3;
            c /= 3;
            if (state == 1) g.add_edge(a, b);
            if (state == 2) g.add_edge(b, a);
        }
        if (!is_acyclic(g)) continue;
        double s = bic_score(data, g);
        if (!best || s < best_score - 1e-9) {
            best = g;
            best_score = s;
        }
    }
    return dag_to_cpdag(*best);
}

std::string ges_enumeration() {
    std::mt19937_64 rng(derive_seed(k_master, {9, 3}));
    std::normal_distribution<double> normal;
    const Eigen::Index T = 2000;
    Eigen::MatrixXd chain(T, 3), coll(T, 3);
    for (Eigen::Index i = 0; i < T; ++i) {
        double a = normal(rng);
        double b = 0.8 * a + normal(rng);
        chain.row(i) << a, b, 0.8 * b + normal(rng);
        double x = normal(rng), y = normal(rng);
        coll.row(i) << x, y, 0.8 * x + 0.8 * y + normal(rng);
    }
    for (const auto& m : {chain, coll}) {
        Dataset d = make_continuous({"A", "B", "C"}, m);
        if (!(ges(d, DiscoveryConfig{}) == exhaustive_optimum(d))) return "ges differs from exhaustive BIC optimum";
    }
    return {};
}

std::string pagerank_props() {
    CausalGraph sym({"A", "B"});
    sym.add_edge("A", "B", EdgeMark::bidirected);
    Ranking r = pagerank(sym);
    if (std::abs(r[0].score - 0.5) > 1e-9 || std::abs(r[1].score - 0.5) > 1e-9) return "symmetric pair not 0.5/0.5";
    for (std::uint64_t s = 0; s < 20; ++s) {
        CausalGraph g = random_dag(8, 12, derive_seed(k_master, {9, 4, s}));
        double total = 0.0;
        for (const auto& e : pagerank(g).entries()) total += e.score;
        if (std::abs(total - 1.0) > 1e-9) return "pagerank scores do not sum to 1";
    }
    return {};
}

std::string ac_monotone() {
    std::mt19937_64 rng(derive_seed(k_master, {9, 5}));
    std::vector<std::string> names;
    for (int i = 0; i < 12; ++i) names.push_back(synthetic_name(i, 12));
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<RankedCase> cases;
        for (int c = 0; c < 8; ++c) {
            auto order = names;
            std::shuffle(order.begin(), order.end(), rng);
            cases.push_back({Ranking::from_order(order), {names[rng() % names.size()]}});
        }
        for (std::size_t k = 1; k < names.size(); ++k) {
            if (ac_at_k(cases, k) > ac_at_k(cases, k + 1) + 1e-12) return "AC@k decreased in k";
        }
    }
    return {};
}

std::string graph_identities() {
    CausalGraph truth({"A", "B", "C"});
    truth.add_edge("A", "B");
    CausalGraph rev({"A", "B", "C"});
    rev.add_edge("B", "A");
    CausalGraph extra({"A", "B", "C"});
    extra.add_edge("A", "B");
    extra.add_edge("A", "C");
    if (graph_f1(truth, truth, GraphMode::directed).f1 != 1.0) return "f1(g, g) != 1";
    if (graph_f1(rev, truth, GraphMode::skeleton).f1 != 1.0 || graph_f1(rev, truth, GraphMode::directed).f1 != 0.0) {
        return "reversed edge F1 identities";
    }
    auto s = graph_f1(extra, truth, GraphMode::directed);
    if (std::abs(s.precision - 0.5) > 1e-12 || s.recall != 1.0 || std::abs(s.f1 - 2.0 / 3.0) > 1e-12) {
        return "extra edge F1 identities";
    }
    if (shd(truth, truth) != 0 || shd(rev, truth) != 1) return "shd identities";
    CausalGraph chain({"A", "B", "C"});
    chain.add_edge("A", "B");
    chain.add_edge("B", "C");
    CausalGraph chain_plus = chain;
    chain_plus.add_edge("A", "C");
    if (shd(chain_plus, chain) != 1) return "shd extra edge";
    return {};
}

std::string determinism_and_round_trip() {
    namespace fs = std::filesystem;
    for (auto spec : {var_spec(6, 8, 300, true), discrete_spec(6, 300, true)}) {
        auto a = generate_case(spec, derive_seed(k_master, {9, 6}));
        auto b = generate_case(spec, derive_seed(k_master, {9, 6}));
        if (format_csv(a.data) != format_csv(b.data)) return "same seed gave different CSV";
        fs::path dir = fs::temp_directory_path() / ("rcakit_accept_" + spec.name);
        fs::remove_all(dir);
        write_case(dir, a.data, a.meta, &*a.truth);
        LoadedCase back = load_case(dir);
        fs::remove_all(dir);
        if (back.data.metric_names() != a.data.metric_names() || back.data.values() != a.data.values()) {
            return "gen -> load_case changed values";
        }
        if (back.meta.inject_index != a.meta.inject_index || !(back.truth && *back.truth == *a.truth)) {
            return "gen -> load_case changed metadata or graph";
        }
    }
    return {};
}

void criterion_9() {
    const std::vector<std::pair<std::string, std::function<std::string()>>> suites{
        {"ci calibration", calibration},        {"pc chain/collider", pc_recovery},
        {"ges vs enumeration", ges_enumeration}, {"pagerank", pagerank_props},
        {"ac@k monotone", ac_monotone},         {"shd/f1 identities", graph_identities},
        {"determinism+round trip", determinism_and_round_trip}};
    std::string failed;
    for (const auto& [name, fn] : suites) {
        std::string why;
        try {
            why = fn();
        } catch (const std::exception& e) {
            why = std::string("threw: ") + e.what();
        }
        if (!why.empty()) failed += " [" + name + ": " + why + "]";
    }
    report(9, failed.empty(), failed.empty() ? "property suites: all " + std::to_string(suites.size()) + " pass"
                                             : "property suites failed:" + failed);
}

}  // namespace

int main() {
    auto t0 = std::chrono::steady_clock::now();
    const std::vector<std::pair<int, std::function<void()>>> steps{
        {1, criterion_1}, {2, criterion_2_and_8}, {4, criterion_4}, {5, criterion_5},
        {6, criterion_6}, {7, criterion_7},       {3, criterion_3}, {9, criterion_9}};
    for (const auto& [id, fn] : steps) {
        try {
            fn();
        } catch (const std::exception& e) {
            report(id, false, std::string("aborted: ") + e.what());
        }
    }
    std::printf("acceptance: %d failing criterion line(s), %.1fs\n", failures, seconds_since(t0));
    return failures == 0 ? 0 : 1;
}
