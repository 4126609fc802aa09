#pragma once

#include <cstdint>

#include "adgcl/graph.hpp"

namespace adgcl::testsupport {

// Knobs for the synthetic benchmark generator. Defaults produce a graph with
// citation-network statistics: 2708 nodes, exactly 5429 undirected edges,
// 1433-dimensional sparse binary features, a heavy-tailed degree
// distribution, and community structure that makes neighborhoods feature-
// homophilous (the signal the detector relies on).
struct BenchmarkSpec {
    std::int64_t n = 2708;
    std::int64_t f = 1433;
    std::int64_t target_edges = 5429;
    std::int64_t communities = 14;
    double intra_community_prob = 0.97;  // edge endpoints share a community
    double pareto_alpha = 2.3;           // degree-weight tail exponent
    double pareto_xm = 1.6;              // degree-weight scale
    double max_weight = 120.0;           // cap on expected degree weight
    std::int64_t words_per_node = 24;
    std::int64_t topic_words = 60;       // vocabulary slice per community
    double topic_word_prob = 0.94;       // in-topic vs uniform noise word
    std::uint64_t seed = 1;
};

AttributedGraph make_benchmark_graph(const BenchmarkSpec& spec);

// Small power-law graph with dense-ish features for property tests.
AttributedGraph make_small_graph(std::int64_t n, std::int64_t f, std::int64_t edges,
                                 std::uint64_t seed);

}  // namespace adgcl::testsupport
