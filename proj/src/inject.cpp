#include "adgcl/inject.hpp"

#include <algorithm>
#include <cstring>

#include "adgcl/error.hpp"

namespace adgcl {

InjectionResult inject_structural(const AttributedGraph& g, std::int64_t clique_size,
                                  std::int64_t clique_count, Rng& rng) {
    if (clique_size < 2) throw ParamError("inject_structural: clique size must be >= 2");
    if (clique_count < 1) throw ParamError("inject_structural: clique count must be >= 1");
    if (clique_size * clique_count > g.n)
        throw ParamError("inject_structural: clique members exceed node count");

    // Partial Fisher-Yates over the whole id range picks p*q distinct nodes;
    // consecutive blocks of p form the cliques.
    std::vector<NodeId> pool(static_cast<std::size_t>(g.n));
    for (NodeId v = 0; v < g.n; ++v) pool[static_cast<std::size_t>(v)] = v;
    const auto total = static_cast<std::size_t>(clique_size * clique_count);
    for (std::size_t t = 0; t < total; ++t) {
        const std::size_t idx =
            t + static_cast<std::size_t>(rng.next_below(pool.size() - t));
        std::swap(pool[t], pool[idx]);
    }

    std::vector<Edge> edges = g.edge_list();
    for (std::int64_t c = 0; c < clique_count; ++c) {
        const std::size_t base = static_cast<std::size_t>(c * clique_size);
        for (std::int64_t i = 0; i < clique_size; ++i)
            for (std::int64_t j = i + 1; j < clique_size; ++j) {
                const NodeId u = pool[base + static_cast<std::size_t>(i)];
                const NodeId v = pool[base + static_cast<std::size_t>(j)];
                edges.emplace_back(std::min(u, v), std::max(u, v));
            }
    }

    InjectionResult out;
    out.graph = build_graph(edges, g.features);
    out.anomalies.assign(pool.begin(), pool.begin() + static_cast<std::int64_t>(total));
    std::sort(out.anomalies.begin(), out.anomalies.end());
    return out;
}

InjectionResult inject_feature(const AttributedGraph& g, std::int64_t count,
                               std::int64_t k_candidates, std::span<const NodeId> exclude,
                               Rng& rng) {
    if (count < 0) throw ParamError("inject_feature: negative count");
    if (k_candidates < 1) throw ParamError("inject_feature: need at least one candidate");
    if (k_candidates > g.n - 1)
        throw ParamError("inject_feature: candidate count exceeds other nodes");
    std::vector<std::uint8_t> blocked(static_cast<std::size_t>(g.n), 0);
    for (NodeId v : exclude) {
        if (v < 0 || v >= g.n) throw ParamError("inject_feature: excluded id out of range");
        blocked[static_cast<std::size_t>(v)] = 1;
    }
    std::vector<NodeId> pool;
    for (NodeId v = 0; v < g.n; ++v)
        if (!blocked[static_cast<std::size_t>(v)]) pool.push_back(v);
    if (count > static_cast<std::int64_t>(pool.size()))
        throw ParamError("inject_feature: not enough unexcluded nodes");

    for (std::size_t t = 0; t < static_cast<std::size_t>(count); ++t) {
        const std::size_t idx =
            t + static_cast<std::size_t>(rng.next_below(pool.size() - t));
        std::swap(pool[t], pool[idx]);
    }

    InjectionResult out;
    out.graph = g;
    const Matrix original = g.features;  // distances and copies use this snapshot
    const std::size_t f = original.cols();
    std::vector<NodeId> candidates;
    for (std::size_t t = 0; t < static_cast<std::size_t>(count); ++t) {
        const NodeId target = pool[t];
        candidates.clear();
        while (candidates.size() < static_cast<std::size_t>(k_candidates)) {
            const auto c = static_cast<NodeId>(rng.next_below(static_cast<std::uint64_t>(g.n)));
            if (c == target) continue;
            if (std::find(candidates.begin(), candidates.end(), c) != candidates.end()) continue;
            candidates.push_back(c);
        }
        // Farthest candidate wins; ties keep the earliest draw.
        const double* xt = original.row(static_cast<std::size_t>(target));
        NodeId best = candidates[0];
        double best_d2 = -1.0;
        for (NodeId c : candidates) {
            const double* xc = original.row(static_cast<std::size_t>(c));
            double d2 = 0.0;
            for (std::size_t j = 0; j < f; ++j) {
                const double diff = xt[j] - xc[j];
                d2 += diff * diff;
            }
            if (d2 > best_d2) {
                best_d2 = d2;
                best = c;
            }
        }
        std::memcpy(out.graph.features.row(static_cast<std::size_t>(target)),
                    original.row(static_cast<std::size_t>(best)), f * sizeof(double));
        out.anomalies.push_back(target);
    }
    std::sort(out.anomalies.begin(), out.anomalies.end());
    return out;
}

}  // namespace adgcl
