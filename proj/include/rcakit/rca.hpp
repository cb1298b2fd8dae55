#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "rcakit/core.hpp"
#include "rcakit/discovery.hpp"
#include "rcakit/scoring.hpp"

namespace rcakit {

struct RcaResult {
    Ranking ranking;
    std::vector<std::string> warnings;
    /// Failure row estimated by methods that do not trust inject_index.
    std::optional<std::size_t> estimated_inject;
    /// Graph the method learned, when it learns one.
    std::optional<CausalGraph> graph;
};

/// Pre rows [pre_begin, pre_end) and post rows [post_begin, post_end).
struct SplitView {
    std::size_t pre_begin = 0;
    std::size_t pre_end = 0;
    std::size_t post_begin = 0;
    std::size_t post_end = 0;
    std::size_t t_hat = 0;

    std::size_t pre_size() const { return pre_end - pre_begin; }
    std::size_t post_size() const { return post_end - post_begin; }
};

/// Shifts inject_index by round(delta_s / interval) and applies the guard
/// band. Throws ErrorKind::window when either side would be empty.
SplitView make_split(const Dataset& data, const CaseMetadata& meta);
/// Split at an explicit row (delta_s not applied).
SplitView make_split_at(const Dataset& data, const CaseMetadata& meta, std::size_t t_hat);

/// Per-metric max post-row z-score against the pre window.
std::vector<double> nsigma_scores(const Dataset& data, const SplitView& split);
AnomalyEvidence nsigma_evidence(const Dataset& data, const CaseMetadata& meta);

RcaResult nsigma(const Dataset& data, const CaseMetadata& meta);
RcaResult baro(const Dataset& data, const CaseMetadata& meta, bool t_f_known);

/// Earliest row where at least 10% of metrics sit beyond |robust z| > 5 for
/// three consecutive rows, against an expanding median/IQR baseline.
std::optional<std::size_t> detect_changepoint(const Dataset& data, std::size_t begin,
                                              std::size_t end);

/// Energy two-sample statistic n*m/(n+m) * energy distance.
double energy_statistic(const std::vector<double>& x, const std::vector<double>& y);
RcaResult epsilon_diagnosis(const Dataset& data, const CaseMetadata& meta);

RcaResult circa(const Dataset& data, const CaseMetadata& meta, const CausalGraph* graph,
                const DiscoveryConfig& cfg);

/// Quantile bins into `bins` levels; discrete data passes through.
Eigen::MatrixXd discretize(const Eigen::MatrixXd& values, std::size_t bins);

RcaResult rcd(const Dataset& data, const CaseMetadata& meta, std::size_t chunk_size,
              std::uint64_t seed, double alpha = 0.05);

RcaResult dummy(const Dataset& data, std::uint64_t seed);

struct RcaOptions {
    DiscoveryConfig discovery;
    std::uint64_t seed = 0;
    std::size_t rcd_chunk_size = 5;
    std::size_t walk_steps = 10000;
    double restart_prob = 0.1;
    double damping = 0.85;
    double dfs_threshold = 3.0;
    /// Optional user graph for circa.
    const CausalGraph* graph = nullptr;
};

RcaResult run_graph_rca(std::string_view discovery_name, std::string_view scorer_name,
                        const Dataset& data, const CaseMetadata& meta, const RcaOptions& opts);

/// Single-method names plus every "<discovery>-<scorer>" pipeline.
std::vector<std::string> rca_methods();
bool is_rca_method(std::string_view name);
/// Methods that never look at inject_index.
bool rca_method_needs_split(std::string_view name);
RcaResult run_rca(std::string_view method, const Dataset& data, const CaseMetadata& meta,
                  const RcaOptions& opts);

}  // namespace rcakit
