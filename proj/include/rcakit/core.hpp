#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "rcakit/error.hpp"

namespace rcakit {

enum class DataKind { continuous, discrete };

std::string_view to_string(DataKind kind);

/// Service attribution: the prefix of a metric name before its first
/// underscore ("cartservice_cpu" -> "cartservice"). Names without an
/// underscore are their own service.
std::string service_of(std::string_view metric);

/// T x M matrix of metric samples. Rows are time, columns are metrics.
class Dataset {
public:
    Dataset() = default;
    Dataset(std::vector<std::string> metric_names, Eigen::MatrixXd values,
            double sampling_interval_s = 1.0, DataKind kind = DataKind::continuous);

    std::size_t rows() const { return static_cast<std::size_t>(values_.rows()); }
    std::size_t cols() const { return static_cast<std::size_t>(values_.cols()); }

    const std::vector<std::string>& metric_names() const { return names_; }
    const std::string& name(std::size_t column) const { return names_.at(column); }
    const Eigen::MatrixXd& values() const { return values_; }
    auto column(std::size_t j) const { return values_.col(static_cast<Eigen::Index>(j)); }

    double sampling_interval_s() const { return interval_; }
    DataKind kind() const { return kind_; }

    std::optional<std::size_t> find(std::string_view metric) const;
    std::size_t index_of(std::string_view metric) const;

    /// Rows [begin, end).
    Dataset slice_rows(std::size_t begin, std::size_t end) const;
    Dataset select_columns(const std::vector<std::size_t>& columns) const;

    /// Distinct service names in first-appearance order.
    std::vector<std::string> services() const;

private:
    std::vector<std::string> names_;
    Eigen::MatrixXd values_;
    double interval_ = 1.0;
    DataKind kind_ = DataKind::continuous;
    std::unordered_map<std::string, std::size_t> index_;
};

enum class FaultType { cpu, mem, disk, delay, loss, sim };

std::string_view to_string(FaultType type);
std::optional<FaultType> parse_fault_type(std::string_view text);

struct CaseMetadata {
    std::optional<std::size_t> inject_index;
    std::size_t observation_start = 0;
    /// Inclusive; absent means the last row.
    std::optional<std::size_t> observation_end;
    /// Failure-time misspecification in seconds.
    double delta_s = 0.0;
    /// Rows immediately before the split excluded from the pre window.
    std::size_t guard_rows = 0;
    std::optional<std::string> root_cause_service;
    std::vector<std::string> root_cause_metrics;
    std::optional<FaultType> fault_type;

    std::size_t end_row(const Dataset& data) const {
        return observation_end.value_or(data.rows() - 1);
    }

    /// Throws ErrorKind::input / reference on violated invariants.
    void validate(const Dataset& data) const;
};

enum class EdgeMark { directed, undirected, bidirected };

std::string_view to_string(EdgeMark mark);

struct Edge {
    std::size_t from = 0;
    std::size_t to = 0;
    EdgeMark mark = EdgeMark::directed;

    bool operator==(const Edge&) const = default;
};

/// Labelled graph with at most one edge per unordered node pair. Undirected
/// and bidirected edges are stored with the lexicographically smaller node
/// name first so that equality is structural.
class CausalGraph {
public:
    CausalGraph() = default;
    explicit CausalGraph(std::vector<std::string> nodes);

    const std::vector<std::string>& nodes() const { return nodes_; }
    const std::string& name(std::size_t v) const { return nodes_.at(v); }
    std::size_t size() const { return nodes_.size(); }

    std::optional<std::size_t> find(std::string_view node) const;
    std::size_t index_of(std::string_view node) const;

    /// Throws ErrorKind::structure if the pair already carries an edge.
    void add_edge(std::size_t from, std::size_t to, EdgeMark mark = EdgeMark::directed);
    void add_edge(std::string_view from, std::string_view to,
                  EdgeMark mark = EdgeMark::directed);
    /// Inserts or replaces the edge on the pair.
    void set_edge(std::size_t from, std::size_t to, EdgeMark mark = EdgeMark::directed);
    bool remove_edge(std::size_t a, std::size_t b);

    std::optional<Edge> edge_between(std::size_t a, std::size_t b) const;
    bool adjacent(std::size_t a, std::size_t b) const { return edge_between(a, b).has_value(); }
    /// True iff a -> b is present as a directed edge.
    bool has_directed(std::size_t a, std::size_t b) const;

    std::vector<Edge> edges() const;
    std::size_t edge_count() const { return edges_.size(); }

    std::vector<std::size_t> parents(std::size_t v) const;
    std::vector<std::size_t> children(std::size_t v) const;
    std::vector<std::size_t> neighbors(std::size_t v) const;

    bool operator==(const CausalGraph& other) const;

private:
    Edge canonical(std::size_t from, std::size_t to, EdgeMark mark) const;
    void check_node(std::size_t v) const;

    std::vector<std::string> nodes_;
    std::unordered_map<std::string, std::size_t> index_;
    std::map<std::pair<std::size_t, std::size_t>, Edge> edges_;
};

/// Same nodes; every edge replaced by an undirected edge on the same pair.
CausalGraph skeleton(const CausalGraph& g);

/// True iff the directed-edge subgraph has no directed cycle.
bool is_acyclic(const CausalGraph& g);

/// Topological order of the directed subgraph, smallest index first among
/// ready nodes. Throws ErrorKind::structure on a cycle.
std::vector<std::size_t> topological_order(const CausalGraph& g);

struct RankEntry {
    std::string metric;
    double score = 0.0;

    bool operator==(const RankEntry&) const = default;
};

/// Entries ordered by descending score; equal scores ordered by name.
class Ranking {
public:
    Ranking() = default;
    explicit Ranking(std::vector<RankEntry> entries);

    /// Scores are reciprocal ranks of the given order.
    static Ranking from_order(const std::vector<std::string>& order);

    const std::vector<RankEntry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    const RankEntry& operator[](std::size_t i) const { return entries_.at(i); }

    std::optional<std::size_t> position(std::string_view metric) const;
    std::vector<std::string> names() const;

    /// Collapses metrics to services; each service keeps its best position.
    Ranking by_service() const;

    bool operator==(const Ranking&) const = default;

private:
    std::vector<RankEntry> entries_;
};

}  // namespace rcakit
