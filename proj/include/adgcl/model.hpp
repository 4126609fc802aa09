#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "adgcl/graph.hpp"
#include "adgcl/matrix.hpp"
#include "adgcl/rng.hpp"

namespace adgcl {

// Encoder weight W_gcn (f x d), bilinear discriminator weight W_bil (d x d),
// and the Adam moment estimates that travel with them in checkpoints.
struct ModelParams {
    Matrix w_gcn, w_bil;
    Matrix m_gcn, v_gcn, m_bil, v_bil;
    std::int64_t adam_step = 0;

    std::int64_t feature_dim() const { return static_cast<std::int64_t>(w_gcn.rows()); }
    std::int64_t embed_dim() const { return static_cast<std::int64_t>(w_gcn.cols()); }
};

// Glorot-uniform weights, zeroed moments.
ModelParams init_params(std::int64_t f, std::int64_t d, Rng& rng);

// Per-node randomness of one contrastive pass: the neighbor set backing each
// node's subgraph readout and the node whose readout serves as its negative.
struct PairStructure {
    std::vector<std::vector<NodeId>> rwr_sets;
    std::vector<NodeId> neg_partner;
};

PairStructure sample_structure(const AttributedGraph& view, std::uint64_t seed,
                               double restart_prob, std::int64_t rwr_size);

struct ForwardOptions {
    double restart_prob = 0.5;
    std::int64_t rwr_size = 4;
    std::int64_t gcn_layers = 1;
    bool mask_anchor = true;
};

struct EncodeResult {
    Matrix xw, pre, h;  // n x d each; h = relu(pre), pre = W_norm^L (X W)
};

// H = relu(W_norm^L X W_gcn) with W_norm the self-looped symmetric-normalized
// adjacency. layers > 1 reapplies the propagation with the same weight.
EncodeResult encode(const AttributedGraph& view, const ModelParams& params,
                    std::int64_t gcn_layers = 1);

// Mean of the h rows in each node's neighbor set.
Matrix readout_mean(const Matrix& h, const std::vector<std::vector<NodeId>>& sets);

// sigma(r W h^T) for one (readout, embedding) pair.
double discriminate(std::span<const double> r, std::span<const double> h, const Matrix& w_bil);

// Everything backward needs: the view's normalized adjacency, activations,
// readouts, raw logits and sigmoid scores for the positive pair (own readout)
// and negative pair (partner readout), plus the sampled structure.
//
// With mask_anchor the contrast keeps each anchor's own features and its
// context disjoint: the readout of node i is computed from pre-activations
// that exclude i's feature contribution (the masked rows are retained flat,
// indexed by mask_offsets, with the adjacency entries that undo the
// contribution, because the gradient needs both), and the anchor side of the
// bilinear score is self_h = relu(X W) - the node's own features through the
// encoder weight without propagation. Without it both sides of the score
// share the neighborhood information, and neighborhood-inconsistent nodes
// still match their own context.
struct ForwardTrace {
    const AttributedGraph* view = nullptr;
    NormalizedAdjacency adj;
    Matrix xw, pre, h;
    Matrix readout;  // n x d
    Matrix g;        // anchor * w_bil^T, shared by both score directions
    std::vector<double> pos_z, neg_z;  // raw bilinear logits
    std::vector<double> pos, neg;      // sigmoid scores, in (0, 1)
    std::int64_t gcn_layers = 1;
    PairStructure structure;
    bool masked = false;
    Matrix self_h;  // relu(xw), the anchor side when masked; empty otherwise
    std::vector<std::int64_t> mask_offsets;  // n + 1 rows into masked_pre
    Matrix masked_pre;
    std::vector<double> mask_adj;  // adjacency entry removed per masked row
};

ForwardTrace forward_with_structure(const AttributedGraph& view, const ModelParams& params,
                                    PairStructure structure, const ForwardOptions& opts,
                                    const Matrix* shared_xw = nullptr);

// sample_structure + forward_with_structure.
ForwardTrace forward_view(const AttributedGraph& view, const ModelParams& params,
                          std::uint64_t seed, const ForwardOptions& opts,
                          const Matrix* shared_xw = nullptr);

}  // namespace adgcl
