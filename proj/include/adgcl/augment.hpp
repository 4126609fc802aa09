#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "adgcl/graph.hpp"
#include "adgcl/matrix.hpp"
#include "adgcl/rng.hpp"

namespace adgcl {

// Rolling per-node record of the last w epochs of discriminator scores.
// Row v holds pairs (s_pos, s_neg) ordered oldest to newest; each push
// shifts a full row left by one pair. Entries live in (0, 2) because each
// stored value is the sum of two sigmoid outputs.
class ScoreWindow {
public:
    ScoreWindow() = default;
    ScoreWindow(std::int64_t n, std::int64_t w);

    void push(std::span<const double> pos, std::span<const double> neg);

    std::span<const double> row(NodeId v) const { return data_.row_span(static_cast<std::size_t>(v)); }

    std::int64_t n() const { return n_; }
    std::int64_t window_len() const { return w_; }
    std::int64_t filled_epochs() const { return filled_; }

    // Raw storage access for snapshotting. Layout is row v = 2w doubles,
    // oldest pair first; unfilled leading pairs are zero.
    const Matrix& data() const { return data_; }
    void restore(Matrix data, std::int64_t filled);

private:
    std::int64_t n_ = 0;
    std::int64_t w_ = 0;
    std::int64_t filled_ = 0;
    Matrix data_;  // n x 2w
};

// Dot product of two nodes' score-window rows, restricted to the filled
// suffix. With an empty window every pair scores 0.
double anomaly_similarity(const ScoreWindow& sw, NodeId u, NodeId v);

// Cosine similarity rows against precomputed unit-norm features. When the
// full n x n product is cached (worth it once per view build) rows come from
// the cache; otherwise they are computed on demand through the same dot
// kernel, so both paths give identical bits.
class FeatureSimilarity {
public:
    explicit FeatureSimilarity(const Matrix& unit_features) : nf_(&unit_features) {}

    void precompute();

    // out[u] = cos(x_u, x_v) for all u; out.size() == n.
    void row(NodeId v, std::span<double> out) const;

    // cos(x_u, x_v) for one pair.
    double pair(NodeId u, NodeId v) const;

    std::int64_t n() const { return static_cast<std::int64_t>(nf_->rows()); }

private:
    const Matrix* nf_;
    Matrix cache_;  // n x n when precomputed, else empty
};

// Neighbor pruning for one head node: k draws without replacement where the
// weight of neighbor v is max(cos(x_u, x_v), 0) (the uniform 1/|N_u| factor
// scales every weight equally and cancels). All-nonpositive weights fall
// back to uniform. Returns the kept neighbors in draw order.
std::vector<NodeId> prune_head_node(const AttributedGraph& g, NodeId u, std::int64_t k,
                                    const FeatureSimilarity& sim, Rng& rng);

// View with every head node's neighborhood pruned to k. An edge survives
// when either endpoint retained it; tail endpoints retain all their edges,
// so each head keeps at least its own k draws and symmetry is preserved.
AttributedGraph build_pruned_view(const AttributedGraph& g, const DegreePartition& part,
                                  const FeatureSimilarity& sim, std::uint64_t seed);

// Auxiliary draw for neighbor completion: weight of candidate u != v is
// max(cos(x_u, x_v), 0) * <S_u, S_v>. When every weight is zero the draw is
// uniform and phi falls back to 0.25; otherwise phi = 0.5 * w_a / w_max.
struct AuxiliaryChoice {
    NodeId node = -1;
    double phi = 0.25;
};
AuxiliaryChoice sample_auxiliary(const ScoreWindow& sw, const FeatureSimilarity& sim, NodeId v,
                                 Rng& rng);

// Mixed neighborhood distribution for tail node v with auxiliary a:
// p(u) = (1 - phi) * t_v(u) + phi * t_a(u), where t_x is the normalized
// product of x's uniform neighbor distribution with the completion weight
// cos(x_u, x_x) * <S_u, S_x>, support restricted to N_x \ {v}. An all-zero
// term renormalizes to uniform over its support; an empty-support term
// donates its mass to the other; if both supports are empty the distribution
// degenerates to {a: 1}.
struct MixedNeighborhood {
    NodeId anchor = -1;
    NodeId auxiliary = -1;
    double phi = 0.0;
    std::vector<NodeId> support;
    std::vector<double> probs;
    std::vector<NodeId> draws;              // draw order, no repeats
    std::vector<NodeId> sampled_neighbors;  // draws united with N_v, sorted
};

// Empirical degree distribution of a reference graph; sampling one degree
// costs one uniform draw.
class EmpiricalDegrees {
public:
    explicit EmpiricalDegrees(const AttributedGraph& g);
    std::int64_t sample(Rng& rng) const;

private:
    std::vector<std::int64_t> degrees_;
};

MixedNeighborhood complete_tail_node(const AttributedGraph& g, const ScoreWindow& sw,
                                     const FeatureSimilarity& sim, NodeId v,
                                     const EmpiricalDegrees& deg_dist, Rng& rng);

// View with every tail node's neighborhood completed. Head rows keep their
// original edges; edges drawn for tail nodes are added symmetrically.
AttributedGraph build_completed_view(const AttributedGraph& g, const ScoreWindow& sw,
                                     const DegreePartition& part, const FeatureSimilarity& sim,
                                     std::uint64_t seed);

}  // namespace adgcl
