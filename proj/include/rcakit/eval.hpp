#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rcakit/core.hpp"
#include "rcakit/discovery.hpp"
#include "rcakit/rca.hpp"

namespace rcakit {

enum class GraphMode { skeleton, directed };

struct GraphScore {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    GraphMode mode = GraphMode::directed;
};

GraphScore graph_f1(const CausalGraph& est, const CausalGraph& truth, GraphMode mode);
int shd(const CausalGraph& est, const CausalGraph& truth);

struct RankedCase {
    Ranking ranking;
    std::vector<std::string> roots;
};

/// Mean over cases of |top-k ∩ roots| / min(k, |roots|).
double ac_at_k(const std::vector<RankedCase>& cases, std::size_t k);
/// Mean of ac_at_k for j = 1..k.
double avg_at_k(const std::vector<RankedCase>& cases, std::size_t k);

/// Orients a partially directed graph into a DAG. Undirected edges follow a
/// consistent extension when one exists; directed edges closing a cycle are
/// reversed and bidirected edges are treated as undirected.
CausalGraph dag_extension(const CausalGraph& g);

struct TuneResult {
    DiscoveryConfig best;
    std::size_t best_index = 0;
    /// BIC on the evaluation split per grid point; empty when the point failed.
    std::vector<std::optional<double>> scores;
    std::vector<std::string> failures;
};

/// Trains on the first 2/3 of rows and scores the DAG extension on the rest.
TuneResult tune_bic_detailed(std::string_view method, const Dataset& data,
                             const std::vector<DiscoveryConfig>& grid);
DiscoveryConfig tune_bic(std::string_view method, const Dataset& data,
                         const std::vector<DiscoveryConfig>& grid);

struct GraphSummary {
    double f1 = 0.0;
    double f1_s = 0.0;
    double shd = 0.0;
};

struct ReportRow {
    std::string method;
    std::string dataset;
    std::string fault_type;
    bool has_ranking = true;
    std::array<double, 5> ac{};
    double avg5 = 0.0;
    double mean_runtime_s = 0.0;
    std::optional<GraphSummary> graph;
    std::size_t cases = 0;
    std::size_t timeouts = 0;
    std::size_t errors = 0;
};

struct EvalReport {
    std::vector<ReportRow> rows;
};

enum class SuiteSource { var, discrete, directory };

struct SuiteDataset {
    std::string name;
    SuiteSource source = SuiteSource::var;
    std::size_t nodes = 10;
    std::size_t edges = 20;
    std::size_t length = 200;
    std::size_t cases = 10;
    /// Defaults to length / 2.
    std::optional<std::size_t> inject_index;
    std::size_t fault_duration = 2;
    double magnitude = 10.0;
    /// False writes fault-free data from the same graph and noise stream.
    bool inject_fault = true;
    /// Directory of case directories when source == directory.
    std::string path;
};

struct SuiteConfig {
    /// RCA method names or discovery names (graph scores only).
    std::vector<std::string> methods;
    std::vector<SuiteDataset> datasets;
    std::size_t repeats = 1;
    std::vector<double> delta_s{0.0};
    double timeout_s = 120.0;
    std::size_t jobs = 1;
    RcaOptions options;

    /// Throws ErrorKind::config before anything runs.
    void validate() const;
};

struct GeneratedCase {
    Dataset data;
    CaseMetadata meta;
    std::optional<CausalGraph> truth;
};

/// One synthetic case of a suite dataset; deterministic in seed.
GeneratedCase generate_case(const SuiteDataset& spec, std::uint64_t seed);

EvalReport run_suite(const SuiteConfig& config, std::uint64_t master_seed);

}  // namespace rcakit
