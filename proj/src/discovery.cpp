#include "rcakit/discovery.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <map>
#include <numeric>

#include "rcakit/citest.hpp"
#include "rcakit/deadline.hpp"
#include "rcakit/stats.hpp"

namespace rcakit {

void DiscoveryConfig::validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorKind::config, "alpha must lie in (0, 1)");
    if (max_lag == 0) fail(ErrorKind::config, "max_lag must be positive");
    if (!(penalty > 0.0) || !std::isfinite(penalty)) fail(ErrorKind::config, "penalty must be positive");
}

std::size_t DiscoveryConfig::effective_max_cond(std::size_t n_metrics) const {
    if (max_cond_size) return *max_cond_size;
    return n_metrics > 50 ? 3 : std::numeric_limits<std::size_t>::max();
}

namespace {

using PairKey = std::pair<std::size_t, std::size_t>;

PairKey key(std::size_t a, std::size_t b) { return std::minmax(a, b); }

void warn(Warnings* w, std::string message) {
    if (w) w->push_back(std::move(message));
}

bool is_flat(const Dataset& data, std::size_t j) {
    auto col = data.column(j);
    double m = col.mean();
    return (col.array() - m).square().mean() < 1e-12;
}

/// Runs fn on the non-constant columns and re-attaches the others as
/// isolated nodes.
CausalGraph on_informative_columns(const Dataset& data, Warnings* warnings,
                                   const std::function<CausalGraph(const Dataset&)>& fn) {
    std::vector<std::size_t> keep;
    for (std::size_t j = 0; j < data.cols(); ++j) {
        if (is_flat(data, j)) {
            warn(warnings, "constant column " + data.name(j) + " left isolated");
        } else {
            keep.push_back(j);
        }
    }
    CausalGraph full(data.metric_names());
    if (keep.size() < 2) return full;
    if (keep.size() == data.cols()) return fn(data);
    CausalGraph g = fn(data.select_columns(keep));
    for (const auto& e : g.edges()) full.set_edge(keep[e.from], keep[e.to], e.mark);
    return full;
}

/// Calls fn on every k-subset of items in lexicographic order until fn
/// returns true. Returns whether fn stopped the enumeration.
bool for_each_subset(const std::vector<std::size_t>& items, std::size_t k,
                     const std::function<bool(const ColumnSet&)>& fn) {
    if (k > items.size()) return false;
    std::vector<std::size_t> idx(k);
    std::iota(idx.begin(), idx.end(), 0);
    ColumnSet subset(k);
    while (true) {
        for (std::size_t i = 0; i < k; ++i) subset[i] = items[idx[i]];
        if (fn(subset)) return true;
        if (k == 0) return false;
        std::size_t i = k;
        while (i > 0 && idx[i - 1] == items.size() - k + (i - 1)) --i;
        if (i == 0) return false;
        ++idx[i - 1];
        for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
}

CIResult run_test(const CITester& tester, std::size_t x, std::size_t y, const ColumnSet& z) {
    try {
        return tester.test(x, y, z);
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::degeneracy) throw;
        // A singular conditioning set carries no evidence of independence.
        return CIResult{0.0, 0.0, false, -std::numeric_limits<double>::infinity()};
    }
}

struct Skeleton {
    std::size_t n = 0;
    std::vector<char> adj;
    std::map<PairKey, ColumnSet> sepset;

    bool adjacent(std::size_t a, std::size_t b) const { return adj[a * n + b] != 0; }
    void remove(std::size_t a, std::size_t b) { adj[a * n + b] = adj[b * n + a] = 0; }
    std::vector<std::size_t> neighbors(std::size_t a) const {
        std::vector<std::size_t> out;
        for (std::size_t b = 0; b < n; ++b) {
            if (adjacent(a, b)) out.push_back(b);
        }
        return out;
    }
    bool separated_by(std::size_t a, std::size_t b, std::size_t z) const {
        auto it = sepset.find(key(a, b));
        if (it == sepset.end()) return false;
        return std::find(it->second.begin(), it->second.end(), z) != it->second.end();
    }
};

/// Order-independent (stable) adjacency search.
Skeleton learn_skeleton(const CITester& tester, std::size_t n, std::size_t max_cond) {
    Skeleton s;
    s.n = n;
    s.adj.assign(n * n, 1);
    for (std::size_t v = 0; v < n; ++v) s.adj[v * n + v] = 0;
    for (std::size_t level = 0; level <= max_cond; ++level) {
        std::vector<std::vector<std::size_t>> frozen(n);
        for (std::size_t x = 0; x < n; ++x) frozen[x] = s.neighbors(x);
        bool any = false;
        for (std::size_t x = 0; x < n; ++x) {
            for (auto y : frozen[x]) {
                if (!s.adjacent(x, y)) continue;
                std::vector<std::size_t> candidates;
                for (auto c : frozen[x]) {
                    if (c != y) candidates.push_back(c);
                }
                if (candidates.size() < level) continue;
                any = true;
                for_each_subset(candidates, level, [&](const ColumnSet& z) {
                    check_deadline();
                    if (!run_test(tester, x, y, z).independent) return false;
                    s.remove(x, y);
                    s.sepset[key(x, y)] = z;
                    return true;
                });
            }
        }
        if (!any) break;
    }
    return s;
}

/// Partially directed graph used for PC orientation and CPDAG conversion.
struct Pdag {
    std::size_t n = 0;
    std::vector<char> adj;
    std::vector<char> arrow;  // arrow[a * n + b]: a -> b

    explicit Pdag(std::size_t size) : n(size), adj(size * size, 0), arrow(size * size, 0) {}

    bool adjacent(std::size_t a, std::size_t b) const { return adj[a * n + b] != 0; }
    bool directed(std::size_t a, std::size_t b) const {
        return adjacent(a, b) && arrow[a * n + b] && !arrow[b * n + a];
    }
    bool undirected(std::size_t a, std::size_t b) const {
        return adjacent(a, b) && !arrow[a * n + b] && !arrow[b * n + a];
    }
    void orient(std::size_t a, std::size_t b) {
        arrow[a * n + b] = 1;
        arrow[b * n + a] = 0;
    }
};

bool meek_step(Pdag& g) {
    const std::size_t n = g.n;
    bool changed = false;
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = 0; b < n; ++b) {
            if (a == b || !g.undirected(a, b)) continue;
            bool orient = false;
            // R1: c -> a - b, c and b nonadjacent.
            for (std::size_t c = 0; c < n && !orient; ++c) {
                if (c != b && g.directed(c, a) && !g.adjacent(c, b)) orient = true;
            }
            // R2: a -> c -> b.
            for (std::size_t c = 0; c < n && !orient; ++c) {
                if (g.directed(a, c) && g.directed(c, b)) orient = true;
            }
            // R3: a - c -> b, a - d -> b, c and d nonadjacent.
            for (std::size_t c = 0; c < n && !orient; ++c) {
                if (!g.undirected(a, c) || !g.directed(c, b)) continue;
                for (std::size_t d = c + 1; d < n && !orient; ++d) {
                    if (g.undirected(a, d) && g.directed(d, b) && !g.adjacent(c, d)) orient = true;
                }
            }
            // R4: a - c -> d -> b with a adjacent d and c, b nonadjacent.
            for (std::size_t c = 0; c < n && !orient; ++c) {
                if (!g.adjacent(a, c) || g.adjacent(c, b) || c == b) continue;
                for (std::size_t d = 0; d < n && !orient; ++d) {
                    if (g.directed(c, d) && g.directed(d, b) && g.adjacent(a, d)) orient = true;
                }
            }
            if (orient) {
                g.orient(a, b);
                changed = true;
            }
        }
    }
    return changed;
}

void apply_meek(Pdag& g) {
    while (meek_step(g)) {
    }
}

CausalGraph pdag_to_graph(const Pdag& g, const std::vector<std::string>& names) {
    CausalGraph out(names);
    for (std::size_t a = 0; a < g.n; ++a) {
        for (std::size_t b = a + 1; b < g.n; ++b) {
            if (!g.adjacent(a, b)) continue;
            if (g.directed(a, b)) {
                out.add_edge(a, b);
            } else if (g.directed(b, a)) {
                out.add_edge(b, a);
            } else {
                out.add_edge(a, b, EdgeMark::undirected);
            }
        }
    }
    return out;
}

CausalGraph pc_impl(const Dataset& data, const DiscoveryConfig& cfg) {
    const std::size_t n = data.cols();
    auto tester = make_ci_tester(data, cfg.alpha);
    Skeleton s = learn_skeleton(*tester, n, cfg.effective_max_cond(n));
    Pdag g(n);
    g.adj = s.adj;
    for (std::size_t z = 0; z < n; ++z) {
        auto nb = s.neighbors(z);
        for (std::size_t i = 0; i < nb.size(); ++i) {
            for (std::size_t j = i + 1; j < nb.size(); ++j) {
                std::size_t x = nb[i], y = nb[j];
                if (s.adjacent(x, y) || s.separated_by(x, y, z)) continue;
                // An arrow already pointing out of z is kept.
                if (!g.directed(z, x)) g.orient(x, z);
                if (!g.directed(z, y)) g.orient(y, z);
            }
        }
    }
    apply_meek(g);
    return pdag_to_graph(g, data.metric_names());
}

enum Mark : char { none = 0, tail = 1, head = 2, circle = 3 };

/// Partial ancestral graph; mark[a * n + b] is the endpoint at b on a *-* b.
struct Pag {
    std::size_t n;
    std::vector<char> mark;

    explicit Pag(const Skeleton& s) : n(s.n), mark(s.n * s.n, none) {
        for (std::size_t a = 0; a < n; ++a) {
            for (std::size_t b = 0; b < n; ++b) {
                if (s.adjacent(a, b)) mark[a * n + b] = circle;
            }
        }
    }
    char at(std::size_t a, std::size_t b) const { return mark[a * n + b]; }
    void set(std::size_t a, std::size_t b, char m) { mark[a * n + b] = m; }
    bool adjacent(std::size_t a, std::size_t b) const { return mark[a * n + b] != none; }
    bool parent(std::size_t a, std::size_t b) const { return at(a, b) == head && at(b, a) == tail; }
};

void orient_colliders(Pag& g, const Skeleton& s) {
    for (std::size_t z = 0; z < g.n; ++z) {
        auto nb = s.neighbors(z);
        for (std::size_t i = 0; i < nb.size(); ++i) {
            for (std::size_t j = i + 1; j < nb.size(); ++j) {
                std::size_t x = nb[i], y = nb[j];
                if (s.adjacent(x, y) || s.separated_by(x, y, z)) continue;
                g.set(x, z, head);
                g.set(y, z, head);
            }
        }
    }
}

/// Nodes reachable from x along paths whose every interior node is a
/// collider or sits in a triangle.
std::vector<std::size_t> possible_d_sep(const Pag& g, std::size_t x) {
    const std::size_t n = g.n;
    std::vector<char> in_set(n, 0), seen(n * n, 0);
    std::deque<PairKey> queue;
    for (std::size_t b = 0; b < n; ++b) {
        if (!g.adjacent(x, b)) continue;
        in_set[b] = 1;
        seen[x * n + b] = 1;
        queue.emplace_back(x, b);
    }
    while (!queue.empty()) {
        auto [a, b] = queue.front();
        queue.pop_front();
        for (std::size_t c = 0; c < n; ++c) {
            if (c == a || c == x || !g.adjacent(b, c) || seen[b * n + c]) continue;
            bool collider = g.at(a, b) == head && g.at(c, b) == head;
            if (!collider && !g.adjacent(a, c)) continue;
            seen[b * n + c] = 1;
            in_set[c] = 1;
            queue.emplace_back(b, c);
        }
    }
    std::vector<std::size_t> out;
    for (std::size_t v = 0; v < n; ++v) {
        if (in_set[v] && v != x) out.push_back(v);
    }
    return out;
}

void possible_d_sep_pass(const CITester& tester, Skeleton& s, const Pag& g, std::size_t max_cond) {
    const std::size_t n = s.n;
    std::vector<std::vector<std::size_t>> pds(n);
    for (std::size_t x = 0; x < n; ++x) pds[x] = possible_d_sep(g, x);
    for (std::size_t x = 0; x < n; ++x) {
        for (std::size_t y = x + 1; y < n; ++y) {
            if (!s.adjacent(x, y)) continue;
            bool removed = false;
            for (auto side : {x, y}) {
                if (removed) break;
                std::vector<std::size_t> pool;
                for (auto v : pds[side]) {
                    if (v != x && v != y) pool.push_back(v);
                }
                std::size_t top = std::min(max_cond, pool.size());
                for (std::size_t level = 0; level <= top && !removed; ++level) {
                    removed = for_each_subset(pool, level, [&](const ColumnSet& z) {
                        check_deadline();
                        if (!run_test(tester, x, y, z).independent) return false;
                        s.remove(x, y);
                        s.sepset[key(x, y)] = z;
                        return true;
                    });
                }
            }
        }
    }
}

bool in_sepset(const Skeleton& s, std::size_t a, std::size_t b, std::size_t z) {
    return s.separated_by(a, b, z);
}

/// Discriminating-path rule: returns true if a mark changed.
bool rule4(Pag& g, const Skeleton& s) {
    const std::size_t n = g.n;
    for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t c = 0; c < n; ++c) {
            if (b == c || !g.adjacent(b, c) || g.at(c, b) != circle) continue;
            for (std::size_t a = 0; a < n; ++a) {
                if (a == b || a == c) continue;
                if (!g.parent(a, c) || g.at(b, a) != head || !g.adjacent(a, b)) continue;
                // Walk backwards from a over colliders that are parents of c.
                std::vector<char> visited(n, 0);
                visited[a] = visited[b] = visited[c] = 1;
                std::deque<std::size_t> queue{a};
                while (!queue.empty()) {
                    std::size_t cur = queue.front();
                    queue.pop_front();
                    for (std::size_t d = 0; d < n; ++d) {
                        if (visited[d] || !g.adjacent(d, cur) || g.at(d, cur) != head) continue;
                        if (!g.adjacent(d, c)) {
                            if (in_sepset(s, d, c, b)) {
                                g.set(c, b, tail);
                                g.set(b, c, head);
                            } else {
                                g.set(a, b, head);
                                g.set(b, a, head);
                                g.set(c, b, head);
                                g.set(b, c, head);
                            }
                            return true;
                        }
                        if (g.parent(d, c) && g.at(cur, d) == head) {
                            visited[d] = 1;
                            queue.push_back(d);
                        }
                    }
                }
            }
        }
    }
    return false;
}

bool fci_rules_step(Pag& g, const Skeleton& s) {
    const std::size_t n = g.n;
    bool changed = false;
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = 0; b < n; ++b) {
            if (a == b || !g.adjacent(a, b) || g.at(a, b) != head) continue;
            // R1: a *-> b o-* c, a and c nonadjacent  =>  b -> c
            for (std::size_t c = 0; c < n; ++c) {
                if (c == a || c == b || !g.adjacent(b, c) || g.adjacent(a, c)) continue;
                if (g.at(c, b) == circle) {
                    g.set(c, b, tail);
                    g.set(b, c, head);
                    changed = true;
                }
            }
        }
    }
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t c = 0; c < n; ++c) {
            if (a == c || !g.adjacent(a, c) || g.at(a, c) != circle) continue;
            // R2: a -> b *-> c or a *-> b -> c, with a *-o c  =>  a *-> c
            for (std::size_t b = 0; b < n; ++b) {
                if (b == a || b == c || !g.adjacent(a, b) || !g.adjacent(b, c)) continue;
                bool first = g.parent(a, b) && g.at(b, c) == head;
                bool second = g.at(a, b) == head && g.parent(b, c);
                if (first || second) {
                    g.set(a, c, head);
                    changed = true;
                    break;
                }
            }
        }
    }
    for (std::size_t d = 0; d < n; ++d) {
        for (std::size_t b = 0; b < n; ++b) {
            if (d == b || !g.adjacent(d, b) || g.at(d, b) != circle) continue;
            // R3: a *-> b <-* c, a *-o d o-* c, a and c nonadjacent, d *-o b  =>  d *-> b
            bool done = false;
            for (std::size_t a = 0; a < n && !done; ++a) {
                if (a == b || a == d || !g.adjacent(a, b) || g.at(a, b) != head) continue;
                if (!g.adjacent(a, d) || g.at(a, d) != circle) continue;
                for (std::size_t c = a + 1; c < n && !done; ++c) {
                    if (c == b || c == d || g.adjacent(a, c)) continue;
                    if (!g.adjacent(c, b) || g.at(c, b) != head) continue;
                    if (!g.adjacent(c, d) || g.at(c, d) != circle) continue;
                    g.set(d, b, head);
                    changed = true;
                    done = true;
                }
            }
        }
    }
    if (rule4(g, s)) changed = true;
    return changed;
}

CausalGraph collapse_pag(const Pag& g, const std::vector<std::string>& names) {
    CausalGraph out(names);
    for (std::size_t a = 0; a < g.n; ++a) {
        for (std::size_t b = a + 1; b < g.n; ++b) {
            if (!g.adjacent(a, b)) continue;
            char at_b = g.at(a, b);
            char at_a = g.at(b, a);
            if (at_a == head && at_b == head) {
                out.add_edge(a, b, EdgeMark::bidirected);
            } else if (at_b == head) {
                out.add_edge(a, b);
            } else if (at_a == head) {
                out.add_edge(b, a);
            } else {
                out.add_edge(a, b, EdgeMark::undirected);
            }
        }
    }
    return out;
}

constexpr std::size_t k_pds_max_cond = 3;

CausalGraph fci_impl(const Dataset& data, const DiscoveryConfig& cfg) {
    const std::size_t n = data.cols();
    auto tester = make_ci_tester(data, cfg.alpha);
    std::size_t max_cond = cfg.effective_max_cond(n);
    Skeleton s = learn_skeleton(*tester, n, max_cond);
    {
        Pag initial(s);
        orient_colliders(initial, s);
        // Possible-d-sep pools are large on wide data; their subsets stay small.
        possible_d_sep_pass(*tester, s, initial, std::min<std::size_t>(max_cond, k_pds_max_cond));
    }
    Pag g(s);
    orient_colliders(g, s);
    while (fci_rules_step(g, s)) {
        check_deadline();
    }
    return collapse_pag(g, data.metric_names());
}

Eigen::MatrixXd lag_block(const Eigen::VectorXd& x, std::size_t lags) {
    auto L = static_cast<Eigen::Index>(lags);
    Eigen::Index rows = x.size() - L;
    Eigen::MatrixXd out(rows, L);
    for (Eigen::Index k = 1; k <= L; ++k) out.col(k - 1) = x.segment(L - k, rows);
    return out;
}

CausalGraph granger_impl(const Dataset& data, const DiscoveryConfig& cfg, Warnings* warnings) {
    const std::size_t n = data.cols();
    const std::size_t L = cfg.max_lag;
    const auto T = static_cast<Eigen::Index>(data.rows());
    std::vector<Eigen::MatrixXd> lags(n);
    for (std::size_t j = 0; j < n; ++j) lags[j] = lag_block(data.column(j), L);
    const Eigen::Index rows = T - static_cast<Eigen::Index>(L);
    const auto full_params = static_cast<Eigen::Index>(1 + 2 * L);
    const double df1 = static_cast<double>(L);
    const double df2 = static_cast<double>(rows - full_params);
    std::vector<char> causes(n * n, 0);
    Eigen::MatrixXd design(rows, 2 * static_cast<Eigen::Index>(L));
    for (std::size_t y = 0; y < n; ++y) {
        Eigen::VectorXd target = data.column(y).tail(rows);
        auto restricted = stats::ols(lags[y], target, true);
        design.leftCols(static_cast<Eigen::Index>(L)) = lags[y];
        for (std::size_t x = 0; x < n; ++x) {
            if (x == y) continue;
            check_deadline();
            design.rightCols(static_cast<Eigen::Index>(L)) = lags[x];
            auto full = stats::ols(design, target, true);
            if (full.rank < full_params) {
                warn(warnings, "granger pair " + data.name(x) + " -> " + data.name(y) +
                                   " skipped: rank-deficient regression");
                continue;
            }
            double rss_f = std::max(full.rss, 1e-300);
            double F = ((restricted.rss - full.rss) / df1) / (rss_f / df2);
            if (stats::f_sf(F, df1, df2) < cfg.alpha) causes[x * n + y] = 1;
        }
    }
    CausalGraph g(data.metric_names());
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
            bool ab = causes[a * n + b], ba = causes[b * n + a];
            if (ab && ba) {
                g.add_edge(a, b, EdgeMark::bidirected);
            } else if (ab) {
                g.add_edge(a, b);
            } else if (ba) {
                g.add_edge(b, a);
            }
        }
    }
    return g;
}

Eigen::VectorXd standardized(const Eigen::VectorXd& x) {
    Eigen::VectorXd c = x.array() - x.mean();
    double sd = std::sqrt(c.squaredNorm() / static_cast<double>(c.size()));
    if (sd < 1e-12) return Eigen::VectorXd::Zero(x.size());
    return c / sd;
}

std::vector<std::size_t> name_order(const std::vector<std::string>& names) {
    std::vector<std::size_t> idx(names.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return names[a] < names[b]; });
    return idx;
}

}  // namespace

double lingam_dependence(const Eigen::Ref<const Eigen::VectorXd>& residual,
                         const Eigen::Ref<const Eigen::VectorXd>& regressor) {
    Eigen::VectorXd tr = residual.array().tanh();
    Eigen::VectorXd tx = regressor.array().tanh();
    return std::abs(stats::pearson(tr, regressor)) + std::abs(stats::pearson(residual, tx));
}

LingamFit direct_lingam_fit(const Dataset& data, double threshold) {
    const std::size_t n = data.cols();
    if (data.rows() < n + 10) {
        fail(ErrorKind::sample_size, "direct_lingam needs at least M + 10 rows");
    }
    const auto by_name = name_order(data.metric_names());
    std::vector<Eigen::VectorXd> work(n);
    for (std::size_t j = 0; j < n; ++j) work[j] = standardized(data.column(j));
    std::vector<std::size_t> remaining = by_name;
    LingamFit fit;
    while (remaining.size() > 1) {
        check_deadline();
        std::size_t best = remaining.front();
        double best_score = std::numeric_limits<double>::infinity();
        for (auto i : remaining) {
            double score = 0.0;
            for (auto j : remaining) {
                if (j == i) continue;
                double r = work[j].dot(work[i]) / static_cast<double>(work[i].size());
                Eigen::VectorXd res = work[j] - r * work[i];
                score += lingam_dependence(standardized(res), work[i]);
            }
            if (score < best_score) {
                best_score = score;
                best = i;
            }
        }
        fit.order.push_back(best);
        remaining.erase(std::find(remaining.begin(), remaining.end(), best));
        for (auto j : remaining) {
            double r = work[j].dot(work[best]) / static_cast<double>(work[best].size());
            work[j] = standardized(work[j] - r * work[best]);
        }
    }
    if (!remaining.empty()) fit.order.push_back(remaining.front());

    auto N = static_cast<Eigen::Index>(n);
    fit.coefficients = Eigen::MatrixXd::Zero(N, N);
    fit.graph = CausalGraph(data.metric_names());
    Eigen::VectorXd sd(N);
    for (Eigen::Index j = 0; j < N; ++j) sd(j) = stats::stddev(data.column(static_cast<std::size_t>(j)));
    for (std::size_t k = 1; k < fit.order.size(); ++k) {
        std::size_t j = fit.order[k];
        Eigen::MatrixXd X(data.values().rows(), static_cast<Eigen::Index>(k));
        for (std::size_t p = 0; p < k; ++p) X.col(static_cast<Eigen::Index>(p)) = data.column(fit.order[p]);
        auto ols = stats::ols(X, data.column(j), true);
        for (std::size_t p = 0; p < k; ++p) {
            std::size_t i = fit.order[p];
            double b = ols.coefficients(static_cast<Eigen::Index>(p + 1));
            fit.coefficients(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = b;
            double scale = sd(static_cast<Eigen::Index>(j)) > 0.0
                               ? sd(static_cast<Eigen::Index>(i)) / sd(static_cast<Eigen::Index>(j))
                               : 0.0;
            if (std::abs(b) * scale > threshold) fit.graph.add_edge(i, j);
        }
    }
    return fit;
}

double local_bic(const Eigen::MatrixXd& values, std::size_t v,
                 const std::vector<std::size_t>& parents, double penalty) {
    const auto T = values.rows();
    Eigen::MatrixXd X(T, static_cast<Eigen::Index>(parents.size()));
    for (std::size_t k = 0; k < parents.size(); ++k) {
        X.col(static_cast<Eigen::Index>(k)) = values.col(static_cast<Eigen::Index>(parents[k]));
    }
    auto fit = stats::ols(X, values.col(static_cast<Eigen::Index>(v)), true);
    double t = static_cast<double>(T);
    double var = std::max(fit.rss / t, 1e-300);
    return t * std::log(var) + t * (1.0 + std::log(2.0 * M_PI)) +
           penalty * static_cast<double>(parents.size() + 1) * std::log(t);
}

double bic_score(const Dataset& data, const CausalGraph& g, double penalty) {
    if (g.size() != data.cols()) fail(ErrorKind::input, "graph and dataset sizes differ");
    for (const auto& e : g.edges()) {
        if (e.mark != EdgeMark::directed) {
            fail(ErrorKind::structure, "bic_score needs a fully directed graph");
        }
    }
    if (!is_acyclic(g)) fail(ErrorKind::structure, "bic_score needs an acyclic graph");
    std::vector<std::size_t> column(g.size());
    for (std::size_t v = 0; v < g.size(); ++v) column[v] = data.index_of(g.name(v));
    double total = 0.0;
    for (std::size_t v = 0; v < g.size(); ++v) {
        std::vector<std::size_t> pa;
        for (auto p : g.parents(v)) pa.push_back(column[p]);
        total += local_bic(data.values(), column[v], pa, penalty);
    }
    return total;
}

CausalGraph dag_to_cpdag(const CausalGraph& dag) {
    if (!is_acyclic(dag)) fail(ErrorKind::structure, "dag_to_cpdag needs an acyclic graph");
    const std::size_t n = dag.size();
    Pdag g(n);
    for (const auto& e : dag.edges()) {
        if (e.mark != EdgeMark::directed) fail(ErrorKind::structure, "dag_to_cpdag needs a DAG");
        g.adj[e.from * n + e.to] = g.adj[e.to * n + e.from] = 1;
    }
    for (std::size_t z = 0; z < n; ++z) {
        auto pa = dag.parents(z);
        for (std::size_t i = 0; i < pa.size(); ++i) {
            for (std::size_t j = i + 1; j < pa.size(); ++j) {
                if (dag.adjacent(pa[i], pa[j])) continue;
                g.orient(pa[i], z);
                g.orient(pa[j], z);
            }
        }
    }
    apply_meek(g);
    return pdag_to_graph(g, dag.nodes());
}

namespace {

CausalGraph ges_impl(const Dataset& data, const DiscoveryConfig& cfg) {
    const std::size_t n = data.cols();
    const Eigen::MatrixXd& X = data.values();
    const auto order = name_order(data.metric_names());
    std::vector<std::vector<std::size_t>> pa(n);
    // Gaussian BIC only needs the centered scatter matrix.
    const double t = static_cast<double>(X.rows());
    const Eigen::MatrixXd centered = X.rowwise() - X.colwise().mean();
    const Eigen::MatrixXd scatter = centered.transpose() * centered;
    auto family_bic = [&](std::size_t v, const std::vector<std::size_t>& parents) {
        double rss = scatter(v, v);
        if (!parents.empty()) {
            const auto k = static_cast<Eigen::Index>(parents.size());
            Eigen::MatrixXd spp(k, k);
            Eigen::VectorXd spv(k);
            for (Eigen::Index i = 0; i < k; ++i) {
                spv(i) = scatter(parents[i], v);
                for (Eigen::Index j = 0; j < k; ++j) spp(i, j) = scatter(parents[i], parents[j]);
            }
            Eigen::VectorXd beta = spp.colPivHouseholderQr().solve(spv);
            rss -= spv.dot(beta);
        }
        double var = std::max(rss / t, 1e-300);
        return t * std::log(var) + t * (1.0 + std::log(2.0 * M_PI)) +
               cfg.penalty * static_cast<double>(parents.size() + 1) * std::log(t);
    };
    std::vector<double> local(n);
    for (std::size_t v = 0; v < n; ++v) local[v] = family_bic(v, pa[v]);
    auto has_parent = [&](std::size_t v, std::size_t p) {
        return std::find(pa[v].begin(), pa[v].end(), p) != pa[v].end();
    };
    constexpr double min_gain = 1e-9;
    // Score-equivalent moves (a->b vs b->a) differ only by rounding; keep the
    // first in name order.
    auto strictly_better = [](double delta, double best) {
        return delta < best - 1e-9 * std::max(1.0, std::abs(best));
    };

    while (true) {
        // reach[a * n + b]: directed path a ~> b.
        std::vector<char> reach(n * n, 0);
        for (std::size_t s = 0; s < n; ++s) {
            std::vector<std::size_t> stack{s};
            while (!stack.empty()) {
                auto u = stack.back();
                stack.pop_back();
                for (std::size_t c = 0; c < n; ++c) {
                    if (has_parent(c, u) && !reach[s * n + c]) {
                        reach[s * n + c] = 1;
                        stack.push_back(c);
                    }
                }
            }
        }
        double best = -min_gain;
        std::size_t best_p = n, best_v = n;
        double best_score = 0.0;
        for (auto p : order) {
            for (auto v : order) {
                if (p == v || has_parent(v, p) || has_parent(p, v) || reach[v * n + p]) continue;
                check_deadline();
                auto cand = pa[v];
                cand.push_back(p);
                std::sort(cand.begin(), cand.end());
                double score = family_bic(v, cand);
                double delta = score - local[v];
                if (strictly_better(delta, best)) {
                    best = delta;
                    best_p = p;
                    best_v = v;
                    best_score = score;
                }
            }
        }
        if (best_p == n) break;
        pa[best_v].push_back(best_p);
        std::sort(pa[best_v].begin(), pa[best_v].end());
        local[best_v] = best_score;
    }

    while (true) {
        double best = -min_gain;
        std::size_t best_p = n, best_v = n;
        double best_score = 0.0;
        for (auto v : order) {
            for (auto p : pa[v]) {
                check_deadline();
                std::vector<std::size_t> cand;
                for (auto q : pa[v]) {
                    if (q != p) cand.push_back(q);
                }
                double score = family_bic(v, cand);
                double delta = score - local[v];
                if (strictly_better(delta, best)) {
                    best = delta;
                    best_p = p;
                    best_v = v;
                    best_score = score;
                }
            }
        }
        if (best_p == n) break;
        pa[best_v].erase(std::find(pa[best_v].begin(), pa[best_v].end(), best_p));
        local[best_v] = best_score;
    }

    CausalGraph dag(data.metric_names());
    for (std::size_t v = 0; v < n; ++v) {
        for (auto p : pa[v]) dag.add_edge(p, v);
    }
    return dag_to_cpdag(dag);
}

}  // namespace

CausalGraph pc(const Dataset& data, const DiscoveryConfig& cfg, Warnings* warnings) {
    cfg.validate();
    if (data.cols() < 2) return CausalGraph(data.metric_names());
    return on_informative_columns(data, warnings, [&](const Dataset& d) { return pc_impl(d, cfg); });
}

CausalGraph fci(const Dataset& data, const DiscoveryConfig& cfg, Warnings* warnings) {
    cfg.validate();
    if (data.cols() < 2) return CausalGraph(data.metric_names());
    return on_informative_columns(data, warnings, [&](const Dataset& d) { return fci_impl(d, cfg); });
}

CausalGraph granger(const Dataset& data, const DiscoveryConfig& cfg, Warnings* warnings) {
    cfg.validate();
    if (data.rows() < 2 * cfg.max_lag + 10) {
        fail(ErrorKind::sample_size, "granger needs at least 2 * max_lag + 10 rows");
    }
    if (data.cols() < 2) return CausalGraph(data.metric_names());
    return on_informative_columns(
        data, warnings, [&](const Dataset& d) { return granger_impl(d, cfg, warnings); });
}

CausalGraph direct_lingam(const Dataset& data, Warnings* warnings) {
    if (data.cols() < 2) return CausalGraph(data.metric_names());
    return on_informative_columns(data, warnings,
                                  [&](const Dataset& d) { return direct_lingam_fit(d).graph; });
}

CausalGraph ges(const Dataset& data, const DiscoveryConfig& cfg, Warnings* warnings) {
    cfg.validate();
    if (data.cols() < 2) return CausalGraph(data.metric_names());
    return on_informative_columns(data, warnings, [&](const Dataset& d) { return ges_impl(d, cfg); });
}

const std::vector<std::string>& discovery_methods() {
    static const std::vector<std::string> names{"pc", "fci", "granger", "lingam", "ges"};
    return names;
}

bool is_discovery_method(std::string_view name) {
    const auto& m = discovery_methods();
    return std::find(m.begin(), m.end(), name) != m.end();
}

CausalGraph discover(std::string_view method, const Dataset& data, const DiscoveryConfig& cfg,
                     Warnings* warnings) {
    if (method == "pc") return pc(data, cfg, warnings);
    if (method == "fci") return fci(data, cfg, warnings);
    if (method == "granger") return granger(data, cfg, warnings);
    if (method == "lingam") return direct_lingam(data, warnings);
    if (method == "ges") return ges(data, cfg, warnings);
    fail(ErrorKind::config, "unknown discovery method " + std::string(method));
}

}  // namespace rcakit
