#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "adgcl/graph.hpp"
#include "adgcl/rng.hpp"

namespace adgcl {

struct InjectionResult {
    AttributedGraph graph;
    std::vector<NodeId> anomalies;  // ascending
};

// q cliques of p nodes each: members are drawn uniformly without replacement
// from nodes not yet marked anomalous, then fully connected. Requires
// p >= 2, q >= 1, p * q <= n.
InjectionResult inject_structural(const AttributedGraph& g, std::int64_t clique_size,
                                  std::int64_t clique_count, Rng& rng);

// count feature anomalies: each target draws k distinct candidate nodes and
// takes the features of the candidate farthest in Euclidean distance. Both
// the distance and the copied row come from the features as they were when
// injection started, so swaps cannot cascade. Targets avoid `exclude` (use
// the structural anomalies) and each other.
InjectionResult inject_feature(const AttributedGraph& g, std::int64_t count,
                               std::int64_t k_candidates, std::span<const NodeId> exclude,
                               Rng& rng);

}  // namespace adgcl
