#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "rcakit/core.hpp"

namespace rcakit {

struct DiscoveryConfig {
    double alpha = 0.05;
    /// Cap on conditioning-set size; unset means unbounded, except that
    /// datasets with more than 50 metrics default to 3.
    std::optional<std::size_t> max_cond_size;
    std::size_t max_lag = 5;
    /// BIC penalty multiplier used by ges.
    double penalty = 1.0;

    void validate() const;
    std::size_t effective_max_cond(std::size_t n_metrics) const;
};

/// Diagnostics collected during discovery (skipped pairs, dropped columns).
using Warnings = std::vector<std::string>;

CausalGraph pc(const Dataset& data, const DiscoveryConfig& cfg, Warnings* warnings = nullptr);
CausalGraph fci(const Dataset& data, const DiscoveryConfig& cfg, Warnings* warnings = nullptr);
CausalGraph granger(const Dataset& data, const DiscoveryConfig& cfg, Warnings* warnings = nullptr);
CausalGraph direct_lingam(const Dataset& data, Warnings* warnings = nullptr);
CausalGraph ges(const Dataset& data, const DiscoveryConfig& cfg, Warnings* warnings = nullptr);

struct LingamFit {
    /// Column indices, most exogenous first.
    std::vector<std::size_t> order;
    /// coefficients(i, j): effect of column i on column j in raw units.
    Eigen::MatrixXd coefficients;
    CausalGraph graph;
};

/// Pruning keeps i -> j when the standardized coefficient exceeds threshold.
LingamFit direct_lingam_fit(const Dataset& data, double threshold = 0.05);

/// Nonlinear residual dependence used to pick the most exogenous variable.
double lingam_dependence(const Eigen::Ref<const Eigen::VectorXd>& residual,
                         const Eigen::Ref<const Eigen::VectorXd>& regressor);

/// Sum over nodes of -2 log-likelihood of the OLS fit on the node's parents
/// plus penalty * (|Pa| + 1) * ln T. Lower is better.
double bic_score(const Dataset& data, const CausalGraph& g, double penalty = 1.0);

/// The family term of bic_score for one column.
double local_bic(const Eigen::MatrixXd& values, std::size_t v,
                 const std::vector<std::size_t>& parents, double penalty);

/// CPDAG of a DAG: v-structures kept, Meek rules applied to the rest.
CausalGraph dag_to_cpdag(const CausalGraph& dag);

const std::vector<std::string>& discovery_methods();
bool is_discovery_method(std::string_view name);
CausalGraph discover(std::string_view method, const Dataset& data, const DiscoveryConfig& cfg,
                     Warnings* warnings = nullptr);

}  // namespace rcakit
