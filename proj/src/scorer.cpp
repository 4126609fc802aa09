#include "adgcl/scorer.hpp"

#include <cmath>
#include <cstring>

#include "adgcl/error.hpp"
#include "adgcl/kernels.hpp"
#include "adgcl/sampling.hpp"

namespace adgcl {

namespace {

constexpr std::uint64_t kSeedRound = 0x0B;

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// One round's score differences on a fixed view whose encodings are already
// computed. g_mat = H W_bil^T; out[i] = sigma(z_neg) - sigma(z_pos).
void score_round(const AttributedGraph& view, const NormalizedAdjacency& adj, const Matrix& xw,
                 const Matrix& pre, const Matrix& h, const Matrix& g_mat,
                 const ScoreOptions& opts, std::uint64_t round_seed, double* out) {
    const auto n = static_cast<std::size_t>(view.n);
    const std::size_t d = h.cols();
    std::vector<double> readout(d);
    for (std::size_t i = 0; i < n; ++i) {
        Rng walk_rng(derive_seed(round_seed, i, 1));
        const auto set = rwr_sample(view, static_cast<NodeId>(i), opts.restart_prob,
                                    opts.rwr_size, walk_rng);
        Rng neg_rng(derive_seed(round_seed, i, 2));
        auto j = neg_rng.next_below(static_cast<std::uint64_t>(n - 1));
        if (j >= i) ++j;

        std::memset(readout.data(), 0, d * sizeof(double));
        if (opts.mask_anchor) {
            for (NodeId k : set) {
                const double aki = adj.entry(k, static_cast<NodeId>(i));
                const double* prek = pre.row(static_cast<std::size_t>(k));
                const double* xwi = xw.row(i);
                for (std::size_t c = 0; c < d; ++c) {
                    const double m = prek[c] - aki * xwi[c];
                    if (m > 0.0) readout[c] += m;
                }
            }
        } else {
            for (NodeId k : set)
                kernels::axpy(1.0, h.row(static_cast<std::size_t>(k)), readout.data(), d);
        }
        const double inv = 1.0 / static_cast<double>(set.size());
        for (std::size_t c = 0; c < d; ++c) readout[c] *= inv;

        const double zp = kernels::dot(readout.data(), g_mat.row(i), d);

        std::memset(readout.data(), 0, d * sizeof(double));
        Rng walk_rng_j(derive_seed(round_seed, static_cast<std::uint64_t>(j), 1));
        const auto set_j = rwr_sample(view, static_cast<NodeId>(j), opts.restart_prob,
                                      opts.rwr_size, walk_rng_j);
        if (opts.mask_anchor) {
            for (NodeId k : set_j) {
                const double akj = adj.entry(k, static_cast<NodeId>(j));
                const double* prek = pre.row(static_cast<std::size_t>(k));
                const double* xwj = xw.row(static_cast<std::size_t>(j));
                for (std::size_t c = 0; c < d; ++c) {
                    const double m = prek[c] - akj * xwj[c];
                    if (m > 0.0) readout[c] += m;
                }
            }
        } else {
            for (NodeId k : set_j)
                kernels::axpy(1.0, h.row(static_cast<std::size_t>(k)), readout.data(), d);
        }
        const double inv_j = 1.0 / static_cast<double>(set_j.size());
        for (std::size_t c = 0; c < d; ++c) readout[c] *= inv_j;
        const double zn = kernels::dot(readout.data(), g_mat.row(i), d);

        out[i] = sigmoid(zn) - sigmoid(zp);
    }
}

struct ViewEncoding {
    NormalizedAdjacency adj;
    Matrix xw, pre, h, g_mat;
};

ViewEncoding encode_for_scoring(const AttributedGraph& view, const ModelParams& params,
                                std::int64_t layers, bool mask_anchor) {
    ViewEncoding e;
    const auto n = static_cast<std::size_t>(view.n);
    const std::size_t d = params.w_gcn.cols();
    e.adj = normalized_adjacency(view);
    e.xw = Matrix(n, d);
    kernels::gemm_nn(view.features, params.w_gcn, e.xw);
    e.pre = Matrix(n, d);
    kernels::spmm(e.adj.view(), e.xw, e.pre);
    for (std::int64_t l = 1; l < layers; ++l) {
        Matrix next(n, d);
        kernels::spmm(e.adj.view(), e.pre, next);
        e.pre = std::move(next);
    }
    e.h = Matrix(n, d);
    kernels::relu(e.pre, e.h);
    e.g_mat = Matrix(n, d);
    if (mask_anchor) {
        // Anchor side of the bilinear score is the node's own features
        // through the encoder weight, matching the masked training contrast.
        Matrix self_h(n, d);
        kernels::relu(e.xw, self_h);
        kernels::gemm_nt(self_h, params.w_bil, e.g_mat);
    } else {
        kernels::gemm_nt(e.h, params.w_bil, e.g_mat);
    }
    return e;
}

}  // namespace

std::vector<double> anomaly_scores(const AttributedGraph& g, const ModelParams& params,
                                   const ScoreOptions& opts, std::uint64_t seed,
                                   const CompletionScoring* completion) {
    if (g.n < 2) throw ParamError("anomaly_scores: need at least two nodes");
    if (opts.rounds < 1) throw ParamError("anomaly_scores: rounds must be >= 1");
    if (opts.mask_anchor && opts.gcn_layers != 1)
        throw ParamError("anomaly_scores: anchor masking requires a single propagation layer");
    if (completion != nullptr &&
        (completion->window == nullptr || completion->partition == nullptr ||
         completion->sim == nullptr))
        throw ParamError("anomaly_scores: incomplete completion context");
    if (completion != nullptr && completion->window->filled_epochs() < 1)
        throw ParamError("anomaly_scores: completion scoring needs a non-empty score window");

    const auto n = static_cast<std::size_t>(g.n);
    Matrix per_round(static_cast<std::size_t>(opts.rounds), n);

    if (completion == nullptr) {
        const ViewEncoding e = encode_for_scoring(g, params, opts.gcn_layers, opts.mask_anchor);
#pragma omp parallel for schedule(static)
        for (std::int64_t r = 0; r < opts.rounds; ++r) {
            const std::uint64_t rs = derive_seed(seed, static_cast<std::uint64_t>(r), kSeedRound);
            score_round(g, e.adj, e.xw, e.pre, e.h, e.g_mat, opts, rs,
                        per_round.row(static_cast<std::size_t>(r)));
        }
    } else {
#pragma omp parallel for schedule(static)
        for (std::int64_t r = 0; r < opts.rounds; ++r) {
            const std::uint64_t rs = derive_seed(seed, static_cast<std::uint64_t>(r), kSeedRound);
            const AttributedGraph view =
                build_completed_view(g, *completion->window, *completion->partition,
                                     *completion->sim, derive_seed(rs, 0, 3));
            const ViewEncoding e = encode_for_scoring(view, params, opts.gcn_layers, opts.mask_anchor);
            score_round(view, e.adj, e.xw, e.pre, e.h, e.g_mat, opts, rs,
                        per_round.row(static_cast<std::size_t>(r)));
        }
    }

    // Rounds accumulate in round order regardless of which thread ran them.
    std::vector<double> scores(n, 0.0);
#pragma omp parallel for schedule(static)
    for (std::int64_t ii = 0; ii < static_cast<std::int64_t>(n); ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        double acc = 0.0;
        for (std::int64_t r = 0; r < opts.rounds; ++r)
            acc += per_round(static_cast<std::size_t>(r), i);
        scores[i] = acc / static_cast<double>(opts.rounds);
    }
    return scores;
}

}  // namespace adgcl
