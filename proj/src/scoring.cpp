#include "rcakit/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace rcakit {

void AnomalyEvidence::validate(const CausalGraph& g) const {
    for (const auto& [metric, s] : scores) {
        if (!g.find(metric)) fail(ErrorKind::reference, "evidence for unknown node " + metric);
        if (!std::isfinite(s) || s < 0.0) {
            fail(ErrorKind::input, "evidence score for " + metric + " must be finite and >= 0");
        }
    }
    if (frontend && !g.find(*frontend)) fail(ErrorKind::reference, "unknown frontend " + *frontend);
}

double AnomalyEvidence::score(const std::string& metric) const {
    auto it = scores.find(metric);
    return it == scores.end() ? 0.0 : it->second;
}

namespace {

/// Successors in the reversed graph: causes of v, plus undirected and
/// bidirected neighbours.
std::vector<std::vector<std::size_t>> reversed_adjacency(const CausalGraph& g) {
    std::vector<std::vector<std::size_t>> out(g.size());
    for (const auto& e : g.edges()) {
        out[e.to].push_back(e.from);
        if (e.mark != EdgeMark::directed) out[e.from].push_back(e.to);
    }
    for (auto& v : out) std::sort(v.begin(), v.end());
    return out;
}

/// Orders nodes by descending score, then name.
std::vector<std::size_t> by_score(const CausalGraph& g, const std::vector<std::size_t>& nodes,
                                  const std::vector<double>& score) {
    auto out = nodes;
    std::sort(out.begin(), out.end(), [&](auto a, auto b) {
        if (score[a] != score[b]) return score[a] > score[b];
        return g.name(a) < g.name(b);
    });
    return out;
}

std::vector<double> evidence_vector(const CausalGraph& g, const std::optional<AnomalyEvidence>& ev) {
    std::vector<double> s(g.size(), 0.0);
    if (ev) {
        for (std::size_t v = 0; v < g.size(); ++v) s[v] = ev->score(g.name(v));
    }
    return s;
}

Ranking ranking_from_nodes(const CausalGraph& g, const std::vector<std::size_t>& order) {
    std::vector<std::string> names;
    names.reserve(order.size());
    for (auto v : order) names.push_back(g.name(v));
    return Ranking::from_order(names);
}

}  // namespace

Ranking pagerank(const CausalGraph& g, double damping,
                 const std::optional<AnomalyEvidence>& personalization) {
    if (!(damping > 0.0 && damping < 1.0)) fail(ErrorKind::config, "damping must lie in (0, 1)");
    if (g.size() == 0) fail(ErrorKind::input, "pagerank needs a nonempty graph");
    const std::size_t n = g.size();
    std::vector<double> p(n, 1.0 / static_cast<double>(n));
    if (personalization) {
        personalization->validate(g);
        auto s = evidence_vector(g, personalization);
        double total = std::accumulate(s.begin(), s.end(), 0.0);
        if (total > 0.0) {
            for (std::size_t v = 0; v < n; ++v) p[v] = s[v] / total;
        }
    }
    auto out = reversed_adjacency(g);
    std::vector<double> x = p, next(n);
    for (int iter = 0; iter < 1000; ++iter) {
        double dangling = 0.0;
        std::fill(next.begin(), next.end(), 0.0);
        for (std::size_t u = 0; u < n; ++u) {
            if (out[u].empty()) {
                dangling += x[u];
                continue;
            }
            double share = x[u] / static_cast<double>(out[u].size());
            for (auto v : out[u]) next[v] += damping * share;
        }
        double diff = 0.0;
        for (std::size_t v = 0; v < n; ++v) {
            next[v] += (damping * dangling + (1.0 - damping)) * p[v];
        }
        double total = std::accumulate(next.begin(), next.end(), 0.0);
        for (std::size_t v = 0; v < n; ++v) {
            next[v] /= total;
            diff += std::abs(next[v] - x[v]);
        }
        std::swap(x, next);
        if (diff < 1e-10) break;
    }
    std::vector<RankEntry> entries;
    for (std::size_t v = 0; v < n; ++v) entries.push_back({g.name(v), x[v]});
    return Ranking(std::move(entries));
}

Ranking random_walk(const CausalGraph& g, const AnomalyEvidence& evidence, std::size_t steps,
                    double restart_prob, std::uint64_t seed) {
    if (steps == 0) fail(ErrorKind::config, "random_walk needs at least one step");
    if (!(restart_prob >= 0.0 && restart_prob < 1.0)) {
        fail(ErrorKind::config, "restart_prob must lie in [0, 1)");
    }
    if (g.size() == 0) fail(ErrorKind::input, "random_walk needs a nonempty graph");
    evidence.validate(g);
    const std::size_t n = g.size();
    auto score = evidence_vector(g, evidence);
    std::size_t start;
    if (evidence.frontend) {
        start = g.index_of(*evidence.frontend);
    } else {
        std::vector<std::size_t> all(n);
        std::iota(all.begin(), all.end(), 0);
        start = by_score(g, all, score).front();
    }
    auto out = reversed_adjacency(g);
    constexpr double eps = 1e-4;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> visits(n, 0.0);
    std::size_t cur = start;
    for (std::size_t s = 0; s < steps; ++s) {
        if (unif(rng) < restart_prob) {
            cur = start;
        } else if (!out[cur].empty()) {
            double total = 0.0;
            for (auto v : out[cur]) total += eps + score[v];
            double u = unif(rng) * total;
            std::size_t pick = out[cur].back();
            for (auto v : out[cur]) {
                u -= eps + score[v];
                if (u < 0.0) {
                    pick = v;
                    break;
                }
            }
            cur = pick;
        }
        visits[cur] += 1.0;
    }
    std::vector<RankEntry> entries;
    for (std::size_t v = 0; v < n; ++v) {
        entries.push_back({g.name(v), visits[v] / static_cast<double>(steps)});
    }
    return Ranking(std::move(entries));
}

Ranking dfs_roots(const CausalGraph& g, const AnomalyEvidence& evidence, double threshold) {
    evidence.validate(g);
    auto score = evidence_vector(g, evidence);
    std::vector<std::size_t> roots, abnormal_rest, normal;
    for (std::size_t v = 0; v < g.size(); ++v) {
        if (score[v] <= threshold) {
            normal.push_back(v);
            continue;
        }
        auto pa = g.parents(v);
        bool has_abnormal_parent =
            std::any_of(pa.begin(), pa.end(), [&](auto p) { return score[p] > threshold; });
        (has_abnormal_parent ? abnormal_rest : roots).push_back(v);
    }
    std::vector<std::size_t> order;
    for (const auto* group : {&roots, &abnormal_rest, &normal}) {
        auto sorted = by_score(g, *group, score);
        order.insert(order.end(), sorted.begin(), sorted.end());
    }
    return ranking_from_nodes(g, order);
}

Ranking root_nodes(const CausalGraph& g, const std::optional<AnomalyEvidence>& evidence) {
    if (evidence) evidence->validate(g);
    auto score = evidence_vector(g, evidence);
    std::vector<std::size_t> roots, rest;
    for (std::size_t v = 0; v < g.size(); ++v) {
        (g.parents(v).empty() ? roots : rest).push_back(v);
    }
    std::vector<std::size_t> order = by_score(g, roots, score);
    auto tail = by_score(g, rest, score);
    order.insert(order.end(), tail.begin(), tail.end());
    return ranking_from_nodes(g, order);
}

}  // namespace rcakit
