#include "rcakit/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace rcakit {

namespace {

constexpr std::size_t burn_in_rows = 50;
constexpr std::size_t levels = 6;

std::vector<std::string> synthetic_names(std::size_t n) {
    std::vector<std::string> names;
    names.reserve(n);
    for (std::size_t i = 0; i < n; ++i) names.push_back(synthetic_name(i, n));
    return names;
}

std::size_t ipow(std::size_t base, std::size_t exp) {
    std::size_t r = 1;
    while (exp--) r *= base;
    return r;
}

double gamma_draw(std::mt19937_64& rng, double shape) {
    std::gamma_distribution<double> g(shape, 1.0);
    return g(rng);
}

void check_fault_window(const FaultSpec& fault, std::size_t length, const CausalGraph& dag) {
    if (!dag.find(fault.target_node)) {
        fail(ErrorKind::reference, "fault target " + fault.target_node + " is not a node");
    }
    if (fault.duration == 0) fail(ErrorKind::input, "fault duration must be positive");
    if (fault.inject_index + fault.duration > length) {
        fail(ErrorKind::input, "fault window exceeds series length");
    }
}

CaseMetadata fault_metadata(const std::optional<FaultSpec>& fault) {
    CaseMetadata meta;
    if (fault) {
        meta.inject_index = fault->inject_index;
        meta.root_cause_metrics = {fault->target_node};
        meta.root_cause_service = service_of(fault->target_node);
        meta.fault_type = FaultType::sim;
    }
    return meta;
}

}  // namespace

std::string synthetic_name(std::size_t index, std::size_t n_nodes) {
    std::size_t width = std::max<std::size_t>(2, std::to_string(n_nodes > 0 ? n_nodes - 1 : 0).size());
    std::string digits = std::to_string(index);
    return "s" + std::string(width - std::min(width, digits.size()), '0') + digits + "_x";
}

CausalGraph random_dag(std::size_t n_nodes, std::size_t n_edges, std::uint64_t seed) {
    if (n_nodes == 0) fail(ErrorKind::input, "random_dag needs at least one node");
    std::size_t max_edges = n_nodes * (n_nodes - 1) / 2;
    if (n_edges > max_edges) {
        fail(ErrorKind::capacity, "edge budget " + std::to_string(n_edges) +
                                      " exceeds DAG maximum " + std::to_string(max_edges));
    }
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> perm(n_nodes);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    pairs.reserve(max_edges);
    for (std::size_t i = 0; i < n_nodes; ++i) {
        for (std::size_t j = i + 1; j < n_nodes; ++j) pairs.emplace_back(perm[i], perm[j]);
    }
    std::shuffle(pairs.begin(), pairs.end(), rng);
    CausalGraph g(synthetic_names(n_nodes));
    for (std::size_t k = 0; k < n_edges; ++k) g.add_edge(pairs[k].first, pairs[k].second);
    return g;
}

void VarModel::validate() const {
    if (!is_acyclic(dag)) fail(ErrorKind::structure, "VAR model graph is cyclic");
    if (noise_sigma.size() != dag.size()) fail(ErrorKind::model, "noise_sigma size mismatch");
    for (double s : noise_sigma) {
        if (!(s > 0.0) || !std::isfinite(s)) fail(ErrorKind::model, "noise_sigma must be positive");
    }
    std::size_t directed = 0;
    for (const auto& e : dag.edges()) {
        if (e.mark != EdgeMark::directed) fail(ErrorKind::structure, "VAR graph must be directed");
        ++directed;
        if (!weights.count({e.from, e.to})) fail(ErrorKind::model, "missing weight for an edge");
    }
    if (weights.size() != directed) fail(ErrorKind::model, "weights not keyed by graph edges");
}

VarModel random_var_model(const CausalGraph& dag, std::uint64_t seed) {
    VarModel model;
    model.dag = dag;
    model.noise_sigma.assign(dag.size(), 1.0);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> mag(0.5, 2.0);
    std::bernoulli_distribution sign(0.5);
    for (const auto& e : dag.edges()) {
        double w = mag(rng);
        model.weights[{e.from, e.to}] = sign(rng) ? w : -w;
    }
    model.validate();
    return model;
}

Eigen::VectorXd stationary_std(const VarModel& model) {
    model.validate();
    auto n = static_cast<Eigen::Index>(model.dag.size());
    // x[t] = A^T x[t] + g A^T x[t-1] + e  =>  x[t] = Phi x[t-1] + B e
    Eigen::MatrixXd At = Eigen::MatrixXd::Zero(n, n);
    for (const auto& [key, w] : model.weights) {
        At(static_cast<Eigen::Index>(key.second), static_cast<Eigen::Index>(key.first)) = w;
    }
    Eigen::MatrixXd B = (Eigen::MatrixXd::Identity(n, n) - At).inverse();
    Eigen::MatrixXd Phi = model.lag_gain * B * At;
    Eigen::VectorXd var_e(n);
    for (Eigen::Index i = 0; i < n; ++i) var_e(i) = model.noise_sigma[i] * model.noise_sigma[i];
    Eigen::MatrixXd term = B * var_e.asDiagonal() * B.transpose();
    Eigen::MatrixXd sigma = term;
    // Phi is nilpotent for an acyclic graph, so the series terminates.
    for (Eigen::Index k = 0; k < n; ++k) {
        term = Phi * term * Phi.transpose();
        sigma += term;
    }
    return sigma.diagonal().cwiseMax(0.0).cwiseSqrt();
}

std::pair<Dataset, CaseMetadata> gen_var(const VarModel& model, std::size_t length,
                                         const std::optional<FaultSpec>& fault,
                                         std::uint64_t seed) {
    model.validate();
    if (length < 10) fail(ErrorKind::input, "length must be at least 10");
    const auto& dag = model.dag;
    std::size_t n = dag.size();
    std::optional<std::size_t> target;
    double shift = 0.0;
    if (fault) {
        check_fault_window(*fault, length, dag);
        target = dag.index_of(fault->target_node);
        shift = fault->magnitude * stationary_std(model)(static_cast<Eigen::Index>(*target));
    }
    auto order = topological_order(dag);
    std::vector<std::vector<std::pair<std::size_t, double>>> parents(n);
    for (const auto& [key, w] : model.weights) parents[key.second].emplace_back(key.first, w);

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::size_t total = length + burn_in_rows;
    Eigen::MatrixXd values(static_cast<Eigen::Index>(length), static_cast<Eigen::Index>(n));
    std::vector<double> prev(n, 0.0), cur(n, 0.0), eps(n, 0.0);
    for (std::size_t t = 0; t < total; ++t) {
        for (std::size_t v = 0; v < n; ++v) eps[v] = model.noise_sigma[v] * normal(rng);
        if (target && t >= burn_in_rows) {
            std::size_t row = t - burn_in_rows;
            if (row >= fault->inject_index && row < fault->inject_index + fault->duration) {
                eps[*target] += shift;
            }
        }
        for (auto v : order) {
            double x = eps[v];
            for (const auto& [p, w] : parents[v]) x += w * (cur[p] + model.lag_gain * prev[p]);
            cur[v] = x;
        }
        if (t >= burn_in_rows) {
            auto row = static_cast<Eigen::Index>(t - burn_in_rows);
            for (std::size_t v = 0; v < n; ++v) values(row, static_cast<Eigen::Index>(v)) = cur[v];
        }
        std::swap(prev, cur);
    }
    Dataset data(dag.nodes(), std::move(values), 1.0, DataKind::continuous);
    return {std::move(data), fault_metadata(fault)};
}

std::pair<std::size_t, std::size_t> bayes_net_edge_range(std::size_t n_nodes) {
    std::size_t max_edges = n_nodes * (n_nodes - 1) / 2;
    std::size_t lo, hi;
    if (n_nodes == 10) {
        lo = 13, hi = 19;
    } else if (n_nodes == 50) {
        lo = 85, hi = 104;
    } else {
        lo = static_cast<std::size_t>(std::llround(1.3 * static_cast<double>(n_nodes)));
        hi = static_cast<std::size_t>(std::llround(1.9 * static_cast<double>(n_nodes)));
    }
    return {std::min(lo, max_edges), std::min(hi, max_edges)};
}

void DiscreteBayesNet::validate() const {
    if (!is_acyclic(dag)) fail(ErrorKind::structure, "Bayes net graph is cyclic");
    if (cpts.size() != dag.size()) fail(ErrorKind::model, "one CPT per node required");
    for (std::size_t v = 0; v < dag.size(); ++v) {
        const auto& cpt = cpts[v];
        auto rows = ipow(levels, dag.parents(v).size());
        if (static_cast<std::size_t>(cpt.rows()) != rows || cpt.cols() != static_cast<Eigen::Index>(levels)) {
            fail(ErrorKind::model, "CPT of " + dag.name(v) + " has wrong shape");
        }
        for (Eigen::Index r = 0; r < cpt.rows(); ++r) {
            if ((cpt.row(r).array() < 0.0).any() || std::abs(cpt.row(r).sum() - 1.0) > 1e-9) {
                fail(ErrorKind::model, "CPT row of " + dag.name(v) + " is not normalized");
            }
        }
    }
}

Eigen::MatrixXd random_cpt(std::size_t n_parents, std::uint64_t seed, double concentration) {
    std::mt19937_64 rng(seed);
    auto rows = static_cast<Eigen::Index>(ipow(levels, n_parents));
    Eigen::MatrixXd cpt(rows, static_cast<Eigen::Index>(levels));
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cpt.cols(); ++c) cpt(r, c) = gamma_draw(rng, concentration);
        double s = cpt.row(r).sum();
        if (s <= 0.0) {
            cpt.row(r).setConstant(1.0 / static_cast<double>(levels));
        } else {
            cpt.row(r) /= s;
        }
    }
    return cpt;
}

DiscreteBayesNet random_bayes_net(std::size_t n_nodes, std::uint64_t seed) {
    if (n_nodes == 0) fail(ErrorKind::input, "random_bayes_net needs at least one node");
    auto [lo, hi] = bayes_net_edge_range(n_nodes);
    std::size_t max_edges = n_nodes * (n_nodes - 1) / 2;
    std::mt19937_64 rng(seed);
    double p = max_edges == 0 ? 0.0
                              : std::min(1.0, 0.5 * static_cast<double>(lo + hi) /
                                                  static_cast<double>(max_edges));
    std::bernoulli_distribution keep(p);
    std::vector<std::size_t> perm(n_nodes);
    std::iota(perm.begin(), perm.end(), 0);
    DiscreteBayesNet net;
    while (true) {
        std::shuffle(perm.begin(), perm.end(), rng);
        CausalGraph g(synthetic_names(n_nodes));
        std::size_t count = 0;
        for (std::size_t i = 0; i < n_nodes; ++i) {
            for (std::size_t j = i + 1; j < n_nodes; ++j) {
                if (keep(rng)) {
                    g.add_edge(perm[i], perm[j]);
                    ++count;
                }
            }
        }
        if (count >= lo && count <= hi) {
            net.dag = std::move(g);
            break;
        }
    }
    for (std::size_t v = 0; v < n_nodes; ++v) {
        net.cpts.push_back(random_cpt(net.dag.parents(v).size(), rng()));
    }
    net.validate();
    return net;
}

std::pair<Dataset, CaseMetadata> gen_discrete(const DiscreteBayesNet& net, std::size_t length,
                                              const std::optional<FaultSpec>& fault,
                                              std::uint64_t seed) {
    net.validate();
    if (length < 10) fail(ErrorKind::input, "length must be at least 10");
    const auto& dag = net.dag;
    std::size_t n = dag.size();
    std::optional<std::size_t> target;
    if (fault) {
        check_fault_window(*fault, length, dag);
        target = dag.index_of(fault->target_node);
        if (!fault->replacement_cpt) fail(ErrorKind::model, "discrete fault needs a replacement CPT");
        const auto& rep = *fault->replacement_cpt;
        auto rows = ipow(levels, dag.parents(*target).size());
        if (static_cast<std::size_t>(rep.rows()) != rows || rep.cols() != static_cast<Eigen::Index>(levels)) {
            fail(ErrorKind::model, "replacement CPT has wrong shape for " + fault->target_node);
        }
        for (Eigen::Index r = 0; r < rep.rows(); ++r) {
            if ((rep.row(r).array() < 0.0).any() || std::abs(rep.row(r).sum() - 1.0) > 1e-9) {
                fail(ErrorKind::model, "replacement CPT row is not normalized");
            }
        }
    }
    auto order = topological_order(dag);
    std::vector<std::vector<std::size_t>> parents(n);
    for (std::size_t v = 0; v < n; ++v) parents[v] = dag.parents(v);

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Eigen::MatrixXd values(static_cast<Eigen::Index>(length), static_cast<Eigen::Index>(n));
    std::vector<int> row(n, 0);
    for (std::size_t t = 0; t < length; ++t) {
        for (auto v : order) {
            std::size_t idx = 0;
            for (auto p : parents[v]) idx = idx * levels + static_cast<std::size_t>(row[p]);
            const Eigen::MatrixXd& cpt =
                (target && v == *target && t >= fault->inject_index) ? *fault->replacement_cpt
                                                                      : net.cpts[v];
            double u = unif(rng);
            int value = static_cast<int>(levels) - 1;
            double acc = 0.0;
            for (std::size_t k = 0; k < levels; ++k) {
                acc += cpt(static_cast<Eigen::Index>(idx), static_cast<Eigen::Index>(k));
                if (u < acc) {
                    value = static_cast<int>(k);
                    break;
                }
            }
            row[v] = value;
        }
        for (std::size_t v = 0; v < n; ++v) {
            values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(v)) = row[v];
        }
    }
    Dataset data(dag.nodes(), std::move(values), 1.0, DataKind::discrete);
    return {std::move(data), fault_metadata(fault)};
}

}  // namespace rcakit
