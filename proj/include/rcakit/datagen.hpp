#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "rcakit/core.hpp"

namespace rcakit {

/// Zero-padded synthetic metric name; every node is its own service.
std::string synthetic_name(std::size_t index, std::size_t n_nodes);

/// DAG on synthetic names with exactly n_edges edges taken from the upper
/// triangle of a random node permutation.
CausalGraph random_dag(std::size_t n_nodes, std::size_t n_edges, std::uint64_t seed);

struct VarModel {
    CausalGraph dag;
    /// Keyed by (parent, child) node index.
    std::map<std::pair<std::size_t, std::size_t>, double> weights;
    std::vector<double> noise_sigma;
    /// Gain of the one-row-lagged parent term relative to the same-row term.
    double lag_gain = 0.1;

    void validate() const;
};

/// Weights drawn from +-U[0.5, 2.0], unit noise.
VarModel random_var_model(const CausalGraph& dag, std::uint64_t seed);

/// Analytic stationary standard deviation of every node.
Eigen::VectorXd stationary_std(const VarModel& model);

struct DiscreteBayesNet {
    CausalGraph dag;
    /// One 6^k x 6 table per node; row index is the parent tuple in mixed
    /// radix with the lowest-index parent most significant.
    std::vector<Eigen::MatrixXd> cpts;

    void validate() const;
};

struct FaultSpec {
    std::string target_node;
    std::size_t inject_index = 0;
    /// Continuous faults: shift in units of the target's stationary std.
    double magnitude = 10.0;
    std::size_t duration = 2;
    /// Discrete faults: table used by the target from inject_index onward.
    std::optional<Eigen::MatrixXd> replacement_cpt;
};

std::pair<Dataset, CaseMetadata> gen_var(const VarModel& model, std::size_t length,
                                         const std::optional<FaultSpec>& fault,
                                         std::uint64_t seed);

/// Inclusive edge-count range the Bayes-net generator rejection-samples into.
std::pair<std::size_t, std::size_t> bayes_net_edge_range(std::size_t n_nodes);

DiscreteBayesNet random_bayes_net(std::size_t n_nodes, std::uint64_t seed);

/// Rows drawn from a symmetric Dirichlet(concentration) over 6 values.
Eigen::MatrixXd random_cpt(std::size_t n_parents, std::uint64_t seed,
                           double concentration = 1.0);

std::pair<Dataset, CaseMetadata> gen_discrete(const DiscreteBayesNet& net, std::size_t length,
                                              const std::optional<FaultSpec>& fault,
                                              std::uint64_t seed);

}  // namespace rcakit
