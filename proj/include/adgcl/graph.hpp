#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "adgcl/kernels.hpp"
#include "adgcl/matrix.hpp"

namespace adgcl {

using NodeId = std::int32_t;
using Edge = std::pair<NodeId, NodeId>;

// Undirected attributed graph in CSR form. Neighbor lists are sorted
// ascending, self-loops and duplicate edges are removed at build time, and
// adjacency is stored symmetrically (each edge appears in both endpoints'
// rows). features has one row per node.
struct AttributedGraph {
    std::int64_t n = 0;
    std::int64_t feature_dim = 0;
    std::vector<std::int64_t> row_offsets;  // n + 1
    std::vector<NodeId> col_indices;        // 2 * edge_count
    Matrix features;                        // n x feature_dim

    std::int64_t degree(NodeId v) const { return row_offsets[v + 1] - row_offsets[v]; }

    std::span<const NodeId> neighbors(NodeId v) const {
        return {col_indices.data() + row_offsets[v],
                static_cast<std::size_t>(degree(v))};
    }

    std::int64_t edge_count() const { return static_cast<std::int64_t>(col_indices.size()) / 2; }

    bool has_edge(NodeId u, NodeId v) const;

    // Undirected edge list with u < v, sorted lexicographically.
    std::vector<Edge> edge_list() const;
};

// Builds the CSR graph from an arbitrary edge list. Endpoint order, duplicate
// edges, and self-loops in the input do not affect the result. Node count
// comes from the feature matrix; every endpoint must be < features.rows().
AttributedGraph build_graph(std::span<const Edge> edges, Matrix features);

// Tail nodes have degree <= k, head nodes degree > k. Node vectors ascend.
struct DegreePartition {
    std::int64_t k_threshold = 0;
    std::vector<NodeId> tail_nodes;
    std::vector<NodeId> head_nodes;
    std::vector<std::uint8_t> is_head;  // n flags

    bool head(NodeId v) const { return is_head[v] != 0; }
};

DegreePartition partition_by_degree(const AttributedGraph& g, std::int64_t k);

// Rows scaled to unit L2 norm; all-zero rows stay zero.
Matrix l2_normalize_rows(const Matrix& x);

inline Matrix l2_normalize_features(const AttributedGraph& g) {
    return l2_normalize_rows(g.features);
}

// cos(x, y) with the zero-vector convention cos(x, 0) = 0.
double cosine_similarity(std::span<const double> x, std::span<const double> y);

// Symmetrically normalized adjacency with self-loops:
// W = D~^{-1/2} (A + I) D~^{-1/2}, D~ = diag(degree + 1). CSR, rows sorted.
struct NormalizedAdjacency {
    std::int64_t n = 0;
    std::vector<std::int64_t> row_offsets;
    std::vector<NodeId> col_indices;
    std::vector<double> weights;

    kernels::SparseView view() const {
        return {static_cast<std::size_t>(n), row_offsets.data(), col_indices.data(),
                weights.data()};
    }

    // Entry (i, j), 0 when the slot is absent. Binary search within the row.
    double entry(NodeId i, NodeId j) const;
};

NormalizedAdjacency normalized_adjacency(const AttributedGraph& g);

}  // namespace adgcl
