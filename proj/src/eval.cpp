#include "rcakit/eval.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <map>
#include <mutex>
#include <numeric>
#include <queue>
#include <random>
#include <thread>
#include <unordered_set>

#include "rcakit/datagen.hpp"
#include "rcakit/deadline.hpp"
#include "rcakit/io.hpp"
#include "rcakit/seed.hpp"

namespace rcakit {

namespace {

void check_same_nodes(const CausalGraph& a, const CausalGraph& b) {
    std::unordered_set<std::string> na(a.nodes().begin(), a.nodes().end());
    bool same = a.size() == b.size() &&
                std::all_of(b.nodes().begin(), b.nodes().end(), [&](const auto& n) { return na.count(n) > 0; });
    if (!same) fail(ErrorKind::input, "graphs have different node sets");
}

/// The edge of `other` on the pair named by e in g, if any, as an edge of g.
std::optional<Edge> counterpart(const CausalGraph& g, const Edge& e, const CausalGraph& other) {
    auto a = other.index_of(g.name(e.from));
    auto b = other.index_of(g.name(e.to));
    auto oe = other.edge_between(a, b);
    if (!oe) return std::nullopt;
    Edge mapped{g.index_of(other.name(oe->from)), g.index_of(other.name(oe->to)), oe->mark};
    return mapped;
}

}  // namespace

GraphScore graph_f1(const CausalGraph& est, const CausalGraph& truth, GraphMode mode) {
    check_same_nodes(est, truth);
    double tp = 0.0;
    for (const auto& e : est.edges()) {
        auto t = counterpart(est, e, truth);
        if (!t) continue;
        if (mode == GraphMode::skeleton || *t == e) tp += 1.0;
    }
    auto n_est = static_cast<double>(est.edge_count());
    auto n_truth = static_cast<double>(truth.edge_count());
    GraphScore s;
    s.mode = mode;
    if (n_est == 0.0 && n_truth == 0.0) {
        s.precision = s.recall = s.f1 = 1.0;
        return s;
    }
    s.precision = n_est > 0.0 ? tp / n_est : 0.0;
    s.recall = n_truth > 0.0 ? tp / n_truth : 0.0;
    s.f1 = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    return s;
}

int shd(const CausalGraph& est, const CausalGraph& truth) {
    check_same_nodes(est, truth);
    int d = 0;
    for (const auto& e : est.edges()) {
        auto t = counterpart(est, e, truth);
        if (!t || !(*t == e)) ++d;
    }
    for (const auto& e : truth.edges()) {
        if (!counterpart(truth, e, est)) ++d;
    }
    return d;
}

double ac_at_k(const std::vector<RankedCase>& cases, std::size_t k) {
    if (cases.empty()) fail(ErrorKind::input, "ac_at_k needs at least one case");
    if (k == 0) fail(ErrorKind::input, "k must be positive");
    double total = 0.0;
    for (const auto& c : cases) {
        if (c.roots.empty()) fail(ErrorKind::input, "case without root causes");
        std::size_t top = std::min(k, c.ranking.size());
        double hits = 0.0;
        for (std::size_t i = 0; i < top; ++i) {
            if (std::find(c.roots.begin(), c.roots.end(), c.ranking[i].metric) != c.roots.end()) hits += 1.0;
        }
        total += hits / static_cast<double>(std::min(k, c.roots.size()));
    }
    return total / static_cast<double>(cases.size());
}

double avg_at_k(const std::vector<RankedCase>& cases, std::size_t k) {
    if (k == 0) fail(ErrorKind::input, "k must be positive");
    double total = 0.0;
    for (std::size_t j = 1; j <= k; ++j) total += ac_at_k(cases, j);
    return total / static_cast<double>(k);
}

CausalGraph dag_extension(const CausalGraph& g) {
    const std::size_t n = g.size();
    const auto by_name = [&] {
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return g.name(a) < g.name(b); });
        return idx;
    }();

    // Directed part first; an edge that would close a cycle is reversed.
    CausalGraph dag(g.nodes());
    std::vector<std::pair<std::size_t, std::size_t>> undirected;
    std::vector<Edge> directed;
    for (const auto& e : g.edges()) {
        if (e.mark == EdgeMark::directed) {
            directed.push_back(e);
        } else {
            undirected.emplace_back(e.from, e.to);
        }
    }
    std::sort(directed.begin(), directed.end(), [&](const Edge& a, const Edge& b) {
        return std::pair(g.name(a.from), g.name(a.to)) < std::pair(g.name(b.from), g.name(b.to));
    });
    auto reaches = [&](std::size_t from, std::size_t to) {
        std::vector<char> seen(n, 0);
        std::vector<std::size_t> stack{from};
        while (!stack.empty()) {
            auto u = stack.back();
            stack.pop_back();
            if (u == to) return true;
            if (seen[u]) continue;
            seen[u] = 1;
            for (auto c : dag.children(u)) stack.push_back(c);
        }
        return false;
    };
    for (const auto& e : directed) {
        if (reaches(e.to, e.from)) {
            dag.add_edge(e.to, e.from);
        } else {
            dag.add_edge(e.from, e.to);
        }
    }

    // Consistent extension: repeatedly remove a sink whose undirected
    // neighbours are adjacent to all its other neighbours.
    std::vector<char> alive(n, 1);
    std::vector<std::vector<std::size_t>> und(n);
    for (auto [a, b] : undirected) {
        und[a].push_back(b);
        und[b].push_back(a);
    }
    auto adjacent_alive = [&](std::size_t a, std::size_t b) {
        if (dag.adjacent(a, b)) return true;
        return std::find(und[a].begin(), und[a].end(), b) != und[a].end();
    };
    std::size_t remaining = n;
    while (remaining > 0) {
        std::optional<std::size_t> pick;
        for (auto x : by_name) {
            if (!alive[x]) continue;
            bool sink = true;
            for (auto c : dag.children(x)) {
                if (alive[c]) sink = false;
            }
            if (!sink) continue;
            std::vector<std::size_t> nbrs;
            for (std::size_t y = 0; y < n; ++y) {
                if (y != x && alive[y] && adjacent_alive(x, y)) nbrs.push_back(y);
            }
            bool ok = true;
            for (auto y : und[x]) {
                if (!alive[y]) continue;
                for (auto z : nbrs) {
                    if (z != y && !adjacent_alive(y, z)) ok = false;
                }
            }
            if (ok) {
                pick = x;
                break;
            }
        }
        if (!pick) break;
        for (auto y : und[*pick]) {
            if (alive[y] && !dag.adjacent(y, *pick)) dag.add_edge(y, *pick);
        }
        alive[*pick] = 0;
        --remaining;
    }
    if (remaining > 0) {
        // No consistent extension: orient the rest along a topological order.
        auto order = topological_order(dag);
        std::vector<std::size_t> pos(n);
        for (std::size_t i = 0; i < n; ++i) pos[order[i]] = i;
        for (auto [a, b] : undirected) {
            if (dag.adjacent(a, b)) continue;
            if (pos[a] < pos[b]) {
                dag.add_edge(a, b);
            } else {
                dag.add_edge(b, a);
            }
        }
    }
    return dag;
}

TuneResult tune_bic_detailed(std::string_view method, const Dataset& data,
                             const std::vector<DiscoveryConfig>& grid) {
    if (grid.empty()) fail(ErrorKind::config, "empty tuning grid");
    if (!is_discovery_method(method)) fail(ErrorKind::config, "unknown discovery method " + std::string(method));
    if (data.rows() < 30) fail(ErrorKind::sample_size, "tuning needs at least 30 rows");
    std::size_t cut = data.rows() * 2 / 3;
    Dataset train = data.slice_rows(0, cut);
    Dataset test = data.slice_rows(cut, data.rows());
    TuneResult result;
    std::optional<double> best;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        try {
            CausalGraph g = discover(method, train, grid[i]);
            double score = bic_score(test, dag_extension(g));
            result.scores.push_back(score);
            if (!best || score < *best) {
                best = score;
                result.best_index = i;
            }
        } catch (const Error& e) {
            result.scores.push_back(std::nullopt);
            result.failures.push_back("grid point " + std::to_string(i) + ": " + e.what());
        }
    }
    if (!best) {
        std::string message = "every grid point failed";
        for (const auto& f : result.failures) message += "; " + f;
        fail(ErrorKind::tuning, message);
    }
    result.best = grid[result.best_index];
    return result;
}

DiscoveryConfig tune_bic(std::string_view method, const Dataset& data,
                         const std::vector<DiscoveryConfig>& grid) {
    return tune_bic_detailed(method, data, grid).best;
}

void SuiteConfig::validate() const {
    if (methods.empty()) fail(ErrorKind::config, "suite lists no methods");
    for (const auto& m : methods) {
        if (!is_rca_method(m) && !is_discovery_method(m)) fail(ErrorKind::config, "unknown method " + m);
    }
    if (datasets.empty()) fail(ErrorKind::config, "suite lists no datasets");
    if (repeats == 0) fail(ErrorKind::config, "repeats must be positive");
    if (delta_s.empty()) fail(ErrorKind::config, "delta_s list is empty");
    for (double d : delta_s) {
        if (!(d >= 0.0)) fail(ErrorKind::config, "delta_s must be >= 0");
    }
    if (!(timeout_s > 0.0)) fail(ErrorKind::config, "timeout_s must be positive");
    options.discovery.validate();
    for (const auto& d : datasets) {
        if (d.name.empty()) fail(ErrorKind::config, "dataset without a name");
        if (d.source == SuiteSource::directory) {
            if (!std::filesystem::is_directory(d.path)) fail(ErrorKind::config, "no such case directory " + d.path);
            continue;
        }
        if (d.cases == 0 || d.nodes == 0) fail(ErrorKind::config, "dataset " + d.name + " is empty");
        if (d.length < 10) fail(ErrorKind::config, "dataset " + d.name + " is shorter than 10 rows");
        std::size_t inject = d.inject_index.value_or(d.length / 2);
        if (inject == 0 || inject + d.fault_duration > d.length) {
            fail(ErrorKind::config, "dataset " + d.name + " has its fault outside the series");
        }
        if (d.source == SuiteSource::var && d.edges > d.nodes * (d.nodes - 1) / 2) {
            fail(ErrorKind::config, "dataset " + d.name + " has too many edges");
        }
    }
}

GeneratedCase generate_case(const SuiteDataset& spec, std::uint64_t seed) {
    std::uint64_t state = seed;
    std::uint64_t graph_seed = splitmix64(state);
    std::uint64_t target_seed = splitmix64(state);
    std::uint64_t data_seed = splitmix64(state);
    std::uint64_t fault_seed = splitmix64(state);
    FaultSpec fault;
    fault.inject_index = spec.inject_index.value_or(spec.length / 2);
    fault.duration = spec.fault_duration;
    fault.magnitude = spec.magnitude;
    std::mt19937_64 pick(target_seed);
    if (spec.source == SuiteSource::var) {
        auto dag = random_dag(spec.nodes, spec.edges, graph_seed);
        auto model = random_var_model(dag, splitmix64(state));
        fault.target_node = dag.name(std::uniform_int_distribution<std::size_t>(0, dag.size() - 1)(pick));
        auto [data, meta] = gen_var(model, spec.length, spec.inject_fault ? std::optional(fault) : std::nullopt,
                                    data_seed);
        return {std::move(data), std::move(meta), std::move(dag)};
    }
    auto net = random_bayes_net(spec.nodes, graph_seed);
    auto target = std::uniform_int_distribution<std::size_t>(0, net.dag.size() - 1)(pick);
    fault.target_node = net.dag.name(target);
    fault.replacement_cpt = random_cpt(net.dag.parents(target).size(), fault_seed);
    auto [data, meta] = gen_discrete(net, spec.length,
                                      spec.inject_fault ? std::optional(fault) : std::nullopt, data_seed);
    return {std::move(data), std::move(meta), net.dag};
}

namespace {

struct Outcome {
    std::optional<Ranking> ranking;
    std::vector<std::string> roots;
    std::optional<GraphSummary> graph;
    std::string fault_type;
    double runtime_s = 0.0;
    bool timeout = false;
    bool error = false;
};

struct Task {
    std::size_t dataset = 0;
    std::size_t repeat = 0;
    std::size_t case_index = 0;
};

std::vector<std::filesystem::path> case_dirs(const std::string& path) {
    std::vector<std::filesystem::path> dirs;
    for (const auto& entry : std::filesystem::directory_iterator(path)) {
        if (entry.is_directory() && std::filesystem::exists(entry.path() / "meta.json")) {
            dirs.push_back(entry.path());
        }
    }
    std::sort(dirs.begin(), dirs.end());
    return dirs;
}

std::optional<GraphSummary> summarize(const std::optional<CausalGraph>& est,
                                      const std::optional<CausalGraph>& truth) {
    if (!est || !truth) return std::nullopt;
    return GraphSummary{graph_f1(*est, *truth, GraphMode::directed).f1,
                        graph_f1(*est, *truth, GraphMode::skeleton).f1,
                        static_cast<double>(shd(*est, *truth))};
}

}  // namespace

EvalReport run_suite(const SuiteConfig& config, std::uint64_t master_seed) {
    config.validate();
    const std::size_t n_methods = config.methods.size();
    const std::size_t n_deltas = config.delta_s.size();

    std::vector<std::vector<std::filesystem::path>> dirs(config.datasets.size());
    std::vector<Task> tasks;
    for (std::size_t d = 0; d < config.datasets.size(); ++d) {
        const auto& ds = config.datasets[d];
        std::size_t n_cases = ds.cases;
        if (ds.source == SuiteSource::directory) {
            dirs[d] = case_dirs(ds.path);
            if (dirs[d].empty()) fail(ErrorKind::config, "no cases under " + ds.path);
            n_cases = dirs[d].size();
        }
        for (std::size_t r = 0; r < config.repeats; ++r) {
            for (std::size_t c = 0; c < n_cases; ++c) tasks.push_back({d, r, c});
        }
    }

    // outcomes[task][delta][method]
    std::vector<std::vector<std::vector<Outcome>>> outcomes(
        tasks.size(), std::vector<std::vector<Outcome>>(n_deltas, std::vector<Outcome>(n_methods)));
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr fatal;

    auto worker = [&] {
        while (true) {
            std::size_t i = next.fetch_add(1);
            if (i >= tasks.size()) return;
            const Task& task = tasks[i];
            const auto& ds = config.datasets[task.dataset];
            try {
                GeneratedCase gc;
                if (ds.source == SuiteSource::directory) {
                    auto loaded = load_case(dirs[task.dataset][task.case_index]);
                    gc = {std::move(loaded.data), std::move(loaded.meta), std::move(loaded.truth)};
                } else {
                    // Seeds depend on (dataset, repeat, case) only, so every method
                    // sees the same cases.
                    gc = generate_case(ds, derive_seed(master_seed, {task.dataset, task.repeat, task.case_index}));
                }
                std::vector<std::string> roots = gc.meta.root_cause_metrics;
                bool service_level = gc.meta.root_cause_service.has_value();
                if (service_level) roots = {*gc.meta.root_cause_service};
                std::string fault =
                    gc.meta.fault_type ? std::string(to_string(*gc.meta.fault_type)) : std::string("SIM");
                for (std::size_t k = 0; k < n_deltas; ++k) {
                    CaseMetadata meta = gc.meta;
                    meta.delta_s = config.delta_s[k];
                    for (std::size_t m = 0; m < n_methods; ++m) {
                        const auto& method = config.methods[m];
                        Outcome& out = outcomes[i][k][m];
                        out.roots = roots;
                        out.fault_type = fault;
                        RcaOptions opts = config.options;
                        opts.seed = derive_seed(master_seed, {task.dataset, task.repeat, task.case_index, m + 1});
                        auto deadline = Clock::now() + std::chrono::duration_cast<Clock::duration>(
                                                           std::chrono::duration<double>(config.timeout_s));
                        ScopedDeadline guard(deadline);
                        auto start = Clock::now();
                        try {
                            if (is_discovery_method(method)) {
                                CausalGraph g = discover(method, gc.data, opts.discovery);
                                out.graph = summarize(g, gc.truth);
                            } else {
                                RcaResult r = run_rca(method, gc.data, meta, opts);
                                out.ranking = service_level ? r.ranking.by_service() : r.ranking;
                                out.graph = summarize(r.graph, gc.truth);
                            }
                        } catch (const Error& e) {
                            if (e.kind() == ErrorKind::timeout) {
                                out.timeout = true;
                            } else {
                                out.error = true;
                            }
                        }
                        out.runtime_s = std::chrono::duration<double>(Clock::now() - start).count();
                    }
                }
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!fatal) fatal = std::current_exception();
            }
        }
    };
    std::size_t n_threads = std::max<std::size_t>(1, std::min(config.jobs, tasks.size()));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (fatal) std::rethrow_exception(fatal);

    // Deterministic reduction ordered by (method, dataset, delta, fault type).
    EvalReport report;
    for (std::size_t m = 0; m < n_methods; ++m) {
        const bool ranked = !is_discovery_method(config.methods[m]);
        for (std::size_t d = 0; d < config.datasets.size(); ++d) {
            for (std::size_t k = 0; k < n_deltas; ++k) {
                std::map<std::string, std::vector<const Outcome*>> groups;
                for (std::size_t i = 0; i < tasks.size(); ++i) {
                    if (tasks[i].dataset != d) continue;
                    const Outcome& o = outcomes[i][k][m];
                    groups[o.fault_type].push_back(&o);
                }
                for (const auto& [fault, group] : groups) {
                    ReportRow row;
                    row.method = config.methods[m];
                    row.dataset = config.datasets[d].name;
                    if (n_deltas > 1 || config.delta_s[k] != 0.0) {
                        row.dataset += "@dt=" + format_double(config.delta_s[k]);
                    }
                    row.fault_type = fault;
                    row.has_ranking = ranked;
                    row.cases = group.size();
                    std::vector<RankedCase> cases;
                    GraphSummary gsum;
                    std::size_t graphs = 0;
                    double runtime = 0.0;
                    for (const auto* o : group) {
                        runtime += o->runtime_s;
                        row.timeouts += o->timeout;
                        row.errors += o->error;
                        // Failed or timed-out cases count as misses.
                        cases.push_back({o->ranking.value_or(Ranking()), o->roots});
                        if (o->graph) {
                            gsum.f1 += o->graph->f1;
                            gsum.f1_s += o->graph->f1_s;
                            gsum.shd += o->graph->shd;
                            ++graphs;
                        }
                    }
                    row.mean_runtime_s = runtime / static_cast<double>(group.size());
                    if (ranked) {
                        for (std::size_t j = 0; j < 5; ++j) row.ac[j] = ac_at_k(cases, j + 1);
                        row.avg5 = std::accumulate(row.ac.begin(), row.ac.end(), 0.0) / 5.0;
                    }
                    if (graphs > 0) {
                        auto g = static_cast<double>(graphs);
                        row.graph = GraphSummary{gsum.f1 / g, gsum.f1_s / g, gsum.shd / g};
                    }
                    report.rows.push_back(std::move(row));
                }
            }
        }
    }
    return report;
}

}  // namespace rcakit
