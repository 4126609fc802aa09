#include "adgcl/graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "adgcl/error.hpp"
#include "adgcl/kernels.hpp"

namespace adgcl {

bool AttributedGraph::has_edge(NodeId u, NodeId v) const {
    const auto nb = neighbors(u);
    return std::binary_search(nb.begin(), nb.end(), v);
}

std::vector<Edge> AttributedGraph::edge_list() const {
    std::vector<Edge> out;
    out.reserve(static_cast<std::size_t>(edge_count()));
    for (NodeId u = 0; u < n; ++u)
        for (NodeId v : neighbors(u))
            if (u < v) out.emplace_back(u, v);
    return out;
}

AttributedGraph build_graph(std::span<const Edge> edges, Matrix features) {
    AttributedGraph g;
    g.n = static_cast<std::int64_t>(features.rows());
    g.feature_dim = static_cast<std::int64_t>(features.cols());
    g.features = std::move(features);

    std::vector<Edge> canon;
    canon.reserve(edges.size());
    for (const auto& [a, b] : edges) {
        if (a < 0 || b < 0 || a >= g.n || b >= g.n)
            throw ParamError("build_graph: endpoint " + std::to_string(std::max(a, b)) +
                             " out of range for n=" + std::to_string(g.n));
        if (a == b) continue;
        canon.emplace_back(std::min(a, b), std::max(a, b));
    }
    std::sort(canon.begin(), canon.end());
    canon.erase(std::unique(canon.begin(), canon.end()), canon.end());

    std::vector<std::int64_t> deg(static_cast<std::size_t>(g.n), 0);
    for (const auto& [a, b] : canon) {
        ++deg[a];
        ++deg[b];
    }
    g.row_offsets.assign(static_cast<std::size_t>(g.n) + 1, 0);
    for (std::int64_t i = 0; i < g.n; ++i) g.row_offsets[i + 1] = g.row_offsets[i] + deg[i];
    g.col_indices.resize(static_cast<std::size_t>(g.row_offsets[g.n]));

    std::vector<std::int64_t> cursor(g.row_offsets.begin(), g.row_offsets.end() - 1);
    for (const auto& [a, b] : canon) {
        g.col_indices[static_cast<std::size_t>(cursor[a]++)] = b;
        g.col_indices[static_cast<std::size_t>(cursor[b]++)] = a;
    }
    // Rows come out sorted: canon is sorted by (min, max), so targets are
    // appended in ascending order for the first endpoint but not the second.
    for (NodeId v = 0; v < g.n; ++v)
        std::sort(g.col_indices.begin() + g.row_offsets[v],
                  g.col_indices.begin() + g.row_offsets[v + 1]);
    return g;
}

DegreePartition partition_by_degree(const AttributedGraph& g, std::int64_t k) {
    if (k < 1) throw ParamError("partition_by_degree: threshold must be >= 1");
    DegreePartition p;
    p.k_threshold = k;
    p.is_head.assign(static_cast<std::size_t>(g.n), 0);
    for (NodeId v = 0; v < g.n; ++v) {
        if (g.degree(v) > k) {
            p.is_head[v] = 1;
            p.head_nodes.push_back(v);
        } else {
            p.tail_nodes.push_back(v);
        }
    }
    return p;
}

Matrix l2_normalize_rows(const Matrix& x) {
    Matrix out(x.rows(), x.cols());
#pragma omp parallel for schedule(static)
    for (std::int64_t ii = 0; ii < static_cast<std::int64_t>(x.rows()); ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        const double* src = x.row(i);
        double* dst = out.row(i);
        const double nrm = std::sqrt(kernels::dot(src, src, x.cols()));
        if (nrm > 0.0)
            for (std::size_t j = 0; j < x.cols(); ++j) dst[j] = src[j] / nrm;
    }
    return out;
}

double cosine_similarity(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw ParamError("cosine_similarity: length mismatch");
    const double nx = std::sqrt(kernels::dot(x.data(), x.data(), x.size()));
    const double ny = std::sqrt(kernels::dot(y.data(), y.data(), y.size()));
    if (nx == 0.0 || ny == 0.0) return 0.0;
    return kernels::dot(x.data(), y.data(), x.size()) / (nx * ny);
}

double NormalizedAdjacency::entry(NodeId i, NodeId j) const {
    const auto begin = col_indices.begin() + row_offsets[i];
    const auto end = col_indices.begin() + row_offsets[i + 1];
    const auto it = std::lower_bound(begin, end, j);
    if (it == end || *it != j) return 0.0;
    return weights[static_cast<std::size_t>(it - col_indices.begin())];
}

NormalizedAdjacency normalized_adjacency(const AttributedGraph& g) {
    NormalizedAdjacency a;
    a.n = g.n;
    a.row_offsets.assign(static_cast<std::size_t>(g.n) + 1, 0);
    for (NodeId v = 0; v < g.n; ++v)
        a.row_offsets[v + 1] = a.row_offsets[v] + g.degree(v) + 1;  // + self-loop
    a.col_indices.resize(static_cast<std::size_t>(a.row_offsets[g.n]));
    a.weights.resize(a.col_indices.size());

    std::vector<double> inv_sqrt(static_cast<std::size_t>(g.n));
    for (NodeId v = 0; v < g.n; ++v)
        inv_sqrt[v] = 1.0 / std::sqrt(static_cast<double>(g.degree(v) + 1));

#pragma omp parallel for schedule(static)
    for (std::int64_t vv = 0; vv < g.n; ++vv) {
        const auto v = static_cast<NodeId>(vv);
        std::int64_t w = a.row_offsets[v];
        bool self_done = false;
        for (NodeId u : g.neighbors(v)) {
            if (!self_done && v < u) {
                a.col_indices[w] = v;
                a.weights[w++] = inv_sqrt[v] * inv_sqrt[v];
                self_done = true;
            }
            a.col_indices[w] = u;
            a.weights[w++] = inv_sqrt[v] * inv_sqrt[u];
        }
        if (!self_done) {
            a.col_indices[w] = v;
            a.weights[w++] = inv_sqrt[v] * inv_sqrt[v];
        }
    }
    return a;
}

}  // namespace adgcl
