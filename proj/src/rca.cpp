#include "rcakit/rca.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "rcakit/citest.hpp"
#include "rcakit/deadline.hpp"
#include "rcakit/stats.hpp"

namespace rcakit {

namespace {

constexpr double scale_floor = 1e-6;

const std::vector<std::string> scorer_names{"pagerank", "random_walk", "dfs", "root_nodes"};

std::vector<double> rows_of(const Dataset& data, std::size_t j, std::size_t begin, std::size_t end) {
    auto col = data.column(j);
    std::vector<double> out;
    out.reserve(end - begin);
    for (std::size_t t = begin; t < end; ++t) out.push_back(col(static_cast<Eigen::Index>(t)));
    return out;
}

Ranking rank_scores(const Dataset& data, const std::vector<double>& scores) {
    std::vector<RankEntry> entries;
    entries.reserve(scores.size());
    for (std::size_t j = 0; j < scores.size(); ++j) entries.push_back({data.name(j), scores[j]});
    return Ranking(std::move(entries));
}

std::vector<double> robust_scores(const Dataset& data, const SplitView& split) {
    std::vector<double> scores(data.cols());
    for (std::size_t j = 0; j < data.cols(); ++j) {
        auto pre = rows_of(data, j, split.pre_begin, split.pre_end);
        double med = stats::median(pre);
        double scale = stats::iqr(pre) + scale_floor;
        double best = 0.0;
        auto col = data.column(j);
        for (std::size_t t = split.post_begin; t < split.post_end; ++t) {
            best = std::max(best, std::abs(col(static_cast<Eigen::Index>(t)) - med) / scale);
        }
        scores[j] = best;
    }
    return scores;
}

Dataset observation_window(const Dataset& data, const CaseMetadata& meta) {
    std::size_t end = meta.end_row(data) + 1;
    if (meta.observation_start == 0 && end == data.rows()) return data;
    return data.slice_rows(meta.observation_start, end);
}

}  // namespace

SplitView make_split_at(const Dataset& data, const CaseMetadata& meta, std::size_t t_hat) {
    std::size_t last = meta.end_row(data);
    if (last >= data.rows()) fail(ErrorKind::window, "observation_end beyond data");
    if (t_hat > last) {
        fail(ErrorKind::window, "split row " + std::to_string(t_hat) + " leaves an empty post window");
    }
    SplitView s;
    s.t_hat = t_hat;
    s.pre_begin = meta.observation_start;
    s.pre_end = t_hat >= meta.guard_rows ? t_hat - meta.guard_rows : 0;
    if (s.pre_end <= s.pre_begin) {
        fail(ErrorKind::window, "split row " + std::to_string(t_hat) + " leaves an empty pre window");
    }
    s.post_begin = t_hat;
    s.post_end = last + 1;
    return s;
}

SplitView make_split(const Dataset& data, const CaseMetadata& meta) {
    if (!meta.inject_index) fail(ErrorKind::window, "case has no inject time");
    auto shift = static_cast<long long>(std::llround(meta.delta_s / data.sampling_interval_s()));
    long long t = static_cast<long long>(*meta.inject_index) + shift;
    if (t < 0) fail(ErrorKind::window, "shifted split row is negative");
    return make_split_at(data, meta, static_cast<std::size_t>(t));
}

std::vector<double> nsigma_scores(const Dataset& data, const SplitView& split) {
    std::vector<double> scores(data.cols());
    const auto pre_len = static_cast<Eigen::Index>(split.pre_size());
    for (std::size_t j = 0; j < data.cols(); ++j) {
        auto col = data.column(j);
        Eigen::VectorXd pre = col.segment(static_cast<Eigen::Index>(split.pre_begin), pre_len);
        double mu = pre.mean();
        double sd = stats::stddev(pre) + scale_floor;
        double best = 0.0;
        for (std::size_t t = split.post_begin; t < split.post_end; ++t) {
            best = std::max(best, std::abs(col(static_cast<Eigen::Index>(t)) - mu) / sd);
        }
        scores[j] = best;
    }
    return scores;
}

AnomalyEvidence nsigma_evidence(const Dataset& data, const CaseMetadata& meta) {
    auto scores = nsigma_scores(data, make_split(data, meta));
    AnomalyEvidence ev;
    for (std::size_t j = 0; j < data.cols(); ++j) ev.scores[data.name(j)] = scores[j];
    return ev;
}

RcaResult nsigma(const Dataset& data, const CaseMetadata& meta) {
    auto split = make_split(data, meta);
    return RcaResult{rank_scores(data, nsigma_scores(data, split)), {}, std::nullopt, std::nullopt};
}

std::optional<std::size_t> detect_changepoint(const Dataset& data, std::size_t begin,
                                              std::size_t end) {
    constexpr std::size_t min_baseline = 30;
    constexpr std::size_t run_length = 3;
    constexpr double z_limit = 5.0;
    const std::size_t m = data.cols();
    if (end <= begin + min_baseline + run_length) return std::nullopt;
    const auto needed = static_cast<std::size_t>(std::ceil(0.1 * static_cast<double>(m)));
    std::vector<std::vector<double>> baseline(m);
    for (std::size_t j = 0; j < m; ++j) {
        auto col = data.column(j);
        for (std::size_t t = begin; t < begin + min_baseline; ++t) {
            baseline[j].push_back(col(static_cast<Eigen::Index>(t)));
        }
        std::sort(baseline[j].begin(), baseline[j].end());
    }
    auto sorted_quantile = [](const std::vector<double>& v, double q) {
        double pos = q * static_cast<double>(v.size() - 1);
        auto lo = static_cast<std::size_t>(std::floor(pos));
        auto hi = std::min(lo + 1, v.size() - 1);
        return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
    };
    std::size_t streak = 0;
    for (std::size_t t = begin + min_baseline; t < end; ++t) {
        check_deadline();
        std::size_t flagged = 0;
        for (std::size_t j = 0; j < m; ++j) {
            const auto& b = baseline[j];
            double med = sorted_quantile(b, 0.5);
            double scale = sorted_quantile(b, 0.75) - sorted_quantile(b, 0.25) + scale_floor;
            double x = data.values()(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j));
            if (std::abs(x - med) / scale > z_limit) ++flagged;
        }
        streak = flagged >= needed ? streak + 1 : 0;
        if (streak == run_length) return t + 1 - run_length;
        for (std::size_t j = 0; j < m; ++j) {
            double x = data.values()(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j));
            auto& b = baseline[j];
            b.insert(std::upper_bound(b.begin(), b.end(), x), x);
        }
    }
    return std::nullopt;
}

RcaResult baro(const Dataset& data, const CaseMetadata& meta, bool t_f_known) {
    RcaResult result;
    SplitView split;
    if (t_f_known) {
        split = make_split(data, meta);
    } else {
        std::size_t begin = meta.observation_start;
        std::size_t end = meta.end_row(data) + 1;
        if (end - begin < 60) {
            fail(ErrorKind::window, "baro needs at least 60 rows to estimate the failure time");
        }
        auto t = detect_changepoint(data, begin, end);
        if (!t) {
            t = begin + (end - begin) / 2;
            result.warnings.push_back("no changepoint found; split at the window midpoint");
        }
        result.estimated_inject = *t;
        split = make_split_at(data, meta, *t);
    }
    result.ranking = rank_scores(data, robust_scores(data, split));
    return result;
}

double energy_statistic(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.empty() || y.empty()) fail(ErrorKind::input, "energy statistic needs two samples");
    // Sum over unordered pairs of |a - b| via sorted prefix sums.
    auto pair_sum = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        double total = 0.0;
        double prefix = 0.0;
        for (std::size_t k = 0; k < v.size(); ++k) {
            total += static_cast<double>(k) * v[k] - prefix;
            prefix += v[k];
        }
        return total;
    };
    std::vector<double> both(x);
    both.insert(both.end(), y.begin(), y.end());
    double wx = pair_sum(x), wy = pair_sum(y);
    double cross = pair_sum(both) - wx - wy;
    auto n = static_cast<double>(x.size());
    auto m = static_cast<double>(y.size());
    double distance = 2.0 * cross / (n * m) - 2.0 * wx / (n * n) - 2.0 * wy / (m * m);
    return std::max(0.0, distance) * n * m / (n + m);
}

RcaResult epsilon_diagnosis(const Dataset& data, const CaseMetadata& meta) {
    auto split = make_split(data, meta);
    if (split.pre_size() < 10 || split.post_size() < 10) {
        fail(ErrorKind::window, "epsilon_diagnosis needs at least 10 rows on each side");
    }
    std::size_t len = std::min(split.pre_size(), split.post_size());
    std::vector<double> scores(data.cols());
    for (std::size_t j = 0; j < data.cols(); ++j) {
        auto pre = rows_of(data, j, split.pre_end - len, split.pre_end);
        auto post = rows_of(data, j, split.post_begin, split.post_begin + len);
        scores[j] = energy_statistic(pre, post);
    }
    return RcaResult{rank_scores(data, scores), {}, std::nullopt, std::nullopt};
}

RcaResult circa(const Dataset& data, const CaseMetadata& meta, const CausalGraph* graph,
                const DiscoveryConfig& cfg) {
    auto split = make_split(data, meta);
    RcaResult result;
    CausalGraph learned;
    if (!graph) {
        learned = pc(observation_window(data, meta), cfg, &result.warnings);
        graph = &learned;
        result.graph = learned;
    }
    for (const auto& node : graph->nodes()) {
        if (!data.find(node)) result.warnings.push_back("graph node " + node + " absent from data; skipped");
    }
    const auto pre_len = static_cast<Eigen::Index>(split.pre_size());
    const auto post_len = static_cast<Eigen::Index>(split.post_size());
    const auto& X = data.values();
    std::vector<double> scores(data.cols(), 0.0);
    for (std::size_t v = 0; v < data.cols(); ++v) {
        std::vector<std::size_t> parents;
        if (auto gv = graph->find(data.name(v))) {
            for (auto p : graph->parents(*gv)) {
                if (auto col = data.find(graph->name(p))) parents.push_back(*col);
            }
        }
        auto k = static_cast<Eigen::Index>(parents.size());
        Eigen::MatrixXd pre_x(pre_len, k), post_x(post_len, k);
        for (Eigen::Index c = 0; c < k; ++c) {
            auto col = static_cast<Eigen::Index>(parents[static_cast<std::size_t>(c)]);
            pre_x.col(c) = X.col(col).segment(static_cast<Eigen::Index>(split.pre_begin), pre_len);
            post_x.col(c) = X.col(col).segment(static_cast<Eigen::Index>(split.post_begin), post_len);
        }
        Eigen::VectorXd pre_y =
            X.col(static_cast<Eigen::Index>(v)).segment(static_cast<Eigen::Index>(split.pre_begin), pre_len);
        Eigen::VectorXd post_y =
            X.col(static_cast<Eigen::Index>(v)).segment(static_cast<Eigen::Index>(split.post_begin), post_len);
        auto fit = stats::ols(pre_x, pre_y, true);
        double sigma = std::sqrt(fit.rss / static_cast<double>(pre_len)) + scale_floor;
        Eigen::VectorXd pred = Eigen::VectorXd::Constant(post_len, fit.coefficients(0));
        if (k > 0) pred += post_x * fit.coefficients.tail(k);
        double mean_z = (post_y - pred).mean() / sigma;
        scores[v] = std::abs(mean_z) * std::sqrt(static_cast<double>(post_len));
    }
    result.ranking = rank_scores(data, scores);
    return result;
}

Eigen::MatrixXd discretize(const Eigen::MatrixXd& values, std::size_t bins) {
    if (bins < 2) fail(ErrorKind::config, "need at least two bins");
    Eigen::MatrixXd out(values.rows(), values.cols());
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
        std::vector<double> col(values.col(j).data(), values.col(j).data() + values.rows());
        std::vector<double> cuts;
        for (std::size_t b = 1; b < bins; ++b) {
            cuts.push_back(stats::quantile(col, static_cast<double>(b) / static_cast<double>(bins)));
        }
        for (Eigen::Index t = 0; t < values.rows(); ++t) {
            auto level = std::lower_bound(cuts.begin(), cuts.end(), values(t, j)) - cuts.begin();
            out(t, j) = static_cast<double>(level);
        }
    }
    return out;
}

RcaResult rcd(const Dataset& data, const CaseMetadata& meta, std::size_t chunk_size,
              std::uint64_t seed, double alpha) {
    if (chunk_size < 2) fail(ErrorKind::config, "chunk_size must be at least 2");
    auto split = make_split(data, meta);
    const std::size_t m = data.cols();
    const auto pre_len = static_cast<Eigen::Index>(split.pre_size());
    const auto post_len = static_cast<Eigen::Index>(split.post_size());

    Eigen::MatrixXd window(pre_len + post_len, static_cast<Eigen::Index>(m));
    window.topRows(pre_len) = data.values().middleRows(static_cast<Eigen::Index>(split.pre_begin), pre_len);
    window.bottomRows(post_len) =
        data.values().middleRows(static_cast<Eigen::Index>(split.post_begin), post_len);
    if (data.kind() == DataKind::continuous) window = discretize(window, 5);

    Eigen::MatrixXd coded(window.rows(), window.cols() + 1);
    coded.leftCols(window.cols()) = window;
    coded.col(window.cols()).head(pre_len).setZero();
    coded.col(window.cols()).tail(post_len).setOnes();
    auto names = data.metric_names();
    names.push_back("__F__");
    GSquareTester tester(Dataset(names, std::move(coded), data.sampling_interval_s(), DataKind::discrete),
                         alpha);
    const std::size_t f = m;

    std::mt19937_64 rng(seed);
    std::vector<std::size_t> candidates(m);
    std::iota(candidates.begin(), candidates.end(), 0);
    while (!candidates.empty()) {
        check_deadline();
        std::shuffle(candidates.begin(), candidates.end(), rng);
        std::vector<std::size_t> survivors;
        for (std::size_t start = 0; start < candidates.size(); start += chunk_size) {
            std::vector<std::size_t> chunk(candidates.begin() + static_cast<std::ptrdiff_t>(start),
                                           candidates.begin() + static_cast<std::ptrdiff_t>(
                                               std::min(start + chunk_size, candidates.size())));
            std::sort(chunk.begin(), chunk.end());
            std::vector<char> linked(chunk.size(), 1);
            for (std::size_t level = 0; level + 1 <= chunk.size(); ++level) {
                bool any = false;
                for (std::size_t i = 0; i < chunk.size(); ++i) {
                    if (!linked[i]) continue;
                    std::vector<std::size_t> others;
                    for (std::size_t k = 0; k < chunk.size(); ++k) {
                        if (k != i) others.push_back(chunk[k]);
                    }
                    if (others.size() < level) continue;
                    any = true;
                    std::vector<std::size_t> idx(level);
                    std::iota(idx.begin(), idx.end(), 0);
                    while (true) {
                        ColumnSet z;
                        for (auto k : idx) z.push_back(others[k]);
                        if (tester.test(chunk[i], f, z).independent) {
                            linked[i] = 0;
                            break;
                        }
                        std::size_t p = level;
                        while (p > 0 && idx[p - 1] == others.size() - level + (p - 1)) --p;
                        if (p == 0) break;
                        ++idx[p - 1];
                        for (std::size_t q = p; q < level; ++q) idx[q] = idx[q - 1] + 1;
                    }
                }
                if (!any) break;
            }
            for (std::size_t i = 0; i < chunk.size(); ++i) {
                if (linked[i]) survivors.push_back(chunk[i]);
            }
        }
        std::sort(survivors.begin(), survivors.end());
        bool shrunk = survivors.size() < candidates.size();
        candidates = std::move(survivors);
        if (!shrunk) break;
    }

    std::vector<double> log_p(m);
    for (std::size_t j = 0; j < m; ++j) log_p[j] = tester.test(j, f, {}).log_p_value;
    std::vector<char> is_candidate(m, 0);
    for (auto c : candidates) is_candidate[c] = 1;
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) {
        if (is_candidate[a] != is_candidate[b]) return is_candidate[a] > is_candidate[b];
        if (log_p[a] != log_p[b]) return log_p[a] < log_p[b];
        return data.name(a) < data.name(b);
    });
    std::vector<std::string> ordered;
    for (auto j : order) ordered.push_back(data.name(j));
    return RcaResult{Ranking::from_order(ordered), {}, std::nullopt, std::nullopt};
}

RcaResult dummy(const Dataset& data, std::uint64_t seed) {
    if (data.cols() == 0) fail(ErrorKind::input, "dummy needs at least one metric");
    auto names = data.metric_names();
    std::mt19937_64 rng(seed);
    std::shuffle(names.begin(), names.end(), rng);
    return RcaResult{Ranking::from_order(names), {}, std::nullopt, std::nullopt};
}

RcaResult run_graph_rca(std::string_view discovery_name, std::string_view scorer_name,
                        const Dataset& data, const CaseMetadata& meta, const RcaOptions& opts) {
    if (!is_discovery_method(discovery_name)) {
        fail(ErrorKind::config, "unknown discovery method " + std::string(discovery_name));
    }
    if (std::find(scorer_names.begin(), scorer_names.end(), scorer_name) == scorer_names.end()) {
        fail(ErrorKind::config, "unknown scorer " + std::string(scorer_name));
    }
    RcaResult result;
    AnomalyEvidence evidence = nsigma_evidence(data, meta);
    CausalGraph g = discover(discovery_name, observation_window(data, meta), opts.discovery,
                             &result.warnings);
    if (scorer_name == "pagerank") {
        result.ranking = pagerank(g, opts.damping);
    } else if (scorer_name == "random_walk") {
        result.ranking = random_walk(g, evidence, opts.walk_steps, opts.restart_prob, opts.seed);
    } else if (scorer_name == "dfs") {
        result.ranking = dfs_roots(g, evidence, opts.dfs_threshold);
    } else {
        result.ranking = root_nodes(g, evidence);
    }
    result.graph = std::move(g);
    return result;
}

std::vector<std::string> rca_methods() {
    std::vector<std::string> out{"nsigma", "baro", "baro_auto", "epsilon_diagnosis",
                                 "circa",  "rcd",  "causalai",  "dummy"};
    for (const auto& d : discovery_methods()) {
        for (const auto& s : scorer_names) out.push_back(d + "-" + s);
    }
    return out;
}

bool is_rca_method(std::string_view name) {
    auto all = rca_methods();
    return std::find(all.begin(), all.end(), name) != all.end();
}

bool rca_method_needs_split(std::string_view name) {
    return name != "dummy" && name != "baro_auto";
}

RcaResult run_rca(std::string_view method, const Dataset& data, const CaseMetadata& meta,
                  const RcaOptions& opts) {
    if (method == "nsigma") return nsigma(data, meta);
    if (method == "baro") return baro(data, meta, true);
    if (method == "baro_auto") return baro(data, meta, false);
    if (method == "epsilon_diagnosis") return epsilon_diagnosis(data, meta);
    if (method == "circa") return circa(data, meta, opts.graph, opts.discovery);
    if (method == "rcd") return rcd(data, meta, opts.rcd_chunk_size, opts.seed, opts.discovery.alpha);
    if (method == "dummy") return dummy(data, opts.seed);
    if (method == "causalai") return run_graph_rca("pc", "root_nodes", data, meta, opts);
    auto dash = method.find('-');
    if (dash != std::string_view::npos) {
        auto d = method.substr(0, dash);
        auto s = method.substr(dash + 1);
        if (is_discovery_method(d) &&
            std::find(scorer_names.begin(), scorer_names.end(), s) != scorer_names.end()) {
            return run_graph_rca(d, s, data, meta, opts);
        }
    }
    fail(ErrorKind::config, "unknown RCA method " + std::string(method));
}

}  // namespace rcakit
