#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "rcakit/core.hpp"

namespace rcakit {

struct AnomalyEvidence {
    std::map<std::string, double> scores;
    /// Entry-point metric for walks.
    std::optional<std::string> frontend;

    /// Throws when a key is not a graph node or a score is negative/non-finite.
    void validate(const CausalGraph& g) const;
    /// Missing metrics score 0.
    double score(const std::string& metric) const;
};

/// Power iteration on the edge-reversed graph; scores sum to 1.
Ranking pagerank(const CausalGraph& g, double damping = 0.85,
                 const std::optional<AnomalyEvidence>& personalization = std::nullopt);

/// Visit frequencies of an anomaly-biased walk on the reversed graph.
Ranking random_walk(const CausalGraph& g, const AnomalyEvidence& evidence, std::size_t steps,
                    double restart_prob, std::uint64_t seed);

/// Roots of the abnormal subgraph first, then other abnormal nodes, then the rest.
Ranking dfs_roots(const CausalGraph& g, const AnomalyEvidence& evidence, double threshold);

/// Nodes without directed parents first, each group ordered by score.
Ranking root_nodes(const CausalGraph& g, const std::optional<AnomalyEvidence>& evidence = std::nullopt);

}  // namespace rcakit
