#pragma once

#include <cstdint>

#include "adgcl/matrix.hpp"
#include "adgcl/model.hpp"

namespace adgcl {

enum class ScoreContrastMode { PosNeg, PosOnly };

struct LossOptions {
    double tau = 0.07;
    double alpha = 0.2;
    bool disable_intra = false;
    bool disable_inter = false;
    // Cosine contrast by default: raw dot products let the optimizer grow
    // embedding norms instead of aligning views.
    bool normalize_infonce_rows = true;
    ScoreContrastMode score_contrast_mode = ScoreContrastMode::PosNeg;
};

struct LossBreakdown {
    double intra_v1 = 0.0;     // first view's discrimination term
    double intra_v2 = 0.0;     // second view's discrimination term
    double inter_feat = 0.0;   // embedding contrast, unscaled
    double inter_score = 0.0;  // score contrast, unscaled
    double alpha = 0.0;        // weight applied to the inter terms
    double total = 0.0;        // intra_v1 + intra_v2 + alpha * (inter_feat + inter_score)

    double intra() const { return intra_v1 + intra_v2; }
};

struct GradientSet {
    Matrix d_w_gcn, d_w_bil;
};

// Reusable scratch. The n x n buffers are claimed only while the contrast
// loss materializes its logits, which it does when n * n doubles fit the
// memory budget; larger graphs take a streaming path with O(n) extra memory.
// The budget is a member so the streaming path stays reachable on inputs of
// any size.
struct ObjectiveWorkspace {
    Matrix logits, pt;
    static constexpr std::size_t kMaterializeBytes = 512ull << 20;
    std::size_t materialize_bytes = kMaterializeBytes;
};

// Binary discrimination loss of one view:
// -(1/2n) sum_i [ln s_pos_i + ln(1 - s_neg_i)], computed from the raw
// logits for stability at saturation.
double intra_loss(const ForwardTrace& t);

// sum_i [logsumexp_j(q_i . k_j / tau) - q_i . k_i / tau].
double infonce(const Matrix& q, const Matrix& k, double tau, bool normalize_rows = false);

// Embedding contrast plus score contrast between two views' traces.
double inter_loss(const ForwardTrace& t1, const ForwardTrace& t2, const LossOptions& opts);

LossBreakdown total_loss(const ForwardTrace& t1, const ForwardTrace& t2, const LossOptions& opts);

// Analytic gradients of the total loss with respect to both weight
// matrices. Both traces must come from views sharing one feature matrix
// (augmented views rewire edges only); xt is that matrix transposed.
LossBreakdown backward(const ForwardTrace& t1, const ForwardTrace& t2, const ModelParams& params,
                       const Matrix& xt, const LossOptions& opts, GradientSet& grads,
                       ObjectiveWorkspace& ws);

}  // namespace adgcl
