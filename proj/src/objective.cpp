#include "adgcl/objective.hpp"

#include <cmath>
#include <cstring>
#include <vector>

#include "adgcl/error.hpp"
#include "adgcl/graph.hpp"
#include "adgcl/kernels.hpp"

namespace adgcl {

namespace {

double softplus(double x) {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

Matrix score_matrix(const ForwardTrace& t, ScoreContrastMode mode) {
    const std::size_t n = t.pos.size();
    const std::size_t m = mode == ScoreContrastMode::PosNeg ? 2 : 1;
    Matrix s(n, m);
    for (std::size_t i = 0; i < n; ++i) {
        s(i, 0) = t.pos[i];
        if (m == 2) s(i, 1) = t.neg[i];
    }
    return s;
}

// L2-normalized copy plus the original row norms (0 rows stay 0).
Matrix normalize_with_norms(const Matrix& x, std::vector<double>& norms) {
    norms.resize(x.rows());
    Matrix out(x.rows(), x.cols());
#pragma omp parallel for schedule(static)
    for (std::int64_t ii = 0; ii < static_cast<std::int64_t>(x.rows()); ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        const double* src = x.row(i);
        double* dst = out.row(i);
        const double nrm = std::sqrt(kernels::dot(src, src, x.cols()));
        norms[i] = nrm;
        if (nrm > 0.0)
            for (std::size_t j = 0; j < x.cols(); ++j) dst[j] = src[j] / nrm;
    }
    return out;
}

// dX from dXn for Xn = X / |X| rowwise: dX_i = (dXn_i - Xn_i <Xn_i, dXn_i>) / |X_i|.
// Zero rows take the zero subgradient.
void denormalize_grad(const Matrix& xn, const std::vector<double>& norms, Matrix& grad) {
#pragma omp parallel for schedule(static)
    for (std::int64_t ii = 0; ii < static_cast<std::int64_t>(xn.rows()); ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        double* g = grad.row(i);
        if (norms[i] == 0.0) {
            std::memset(g, 0, xn.cols() * sizeof(double));
            continue;
        }
        const double* xi = xn.row(i);
        const double proj = kernels::dot(xi, g, xn.cols());
        const double inv = 1.0 / norms[i];
        for (std::size_t j = 0; j < xn.cols(); ++j) g[j] = (g[j] - xi[j] * proj) * inv;
    }
}

bool materialize_fits(std::size_t n, const ObjectiveWorkspace& ws) {
    return n * n * sizeof(double) <= ws.materialize_bytes;
}

// InfoNCE with the diagonal as positives. Adds scale * gradient into dq/dk
// when they are non-null (shapes must already match q/k). Returns the loss.
double ctr(const Matrix& q_raw, const Matrix& k_raw, double tau, bool normalize, double scale,
           Matrix* dq, Matrix* dk, ObjectiveWorkspace& ws) {
    if (q_raw.rows() != k_raw.rows() || q_raw.cols() != k_raw.cols())
        throw ParamError("infonce: operand shape mismatch");
    if (!(tau > 0.0)) throw ParamError("infonce: temperature must be positive");
    const std::size_t n = q_raw.rows(), m = q_raw.cols();
    if (n == 0) return 0.0;

    std::vector<double> qnorms, knorms;
    const Matrix* q = &q_raw;
    const Matrix* k = &k_raw;
    Matrix qn, kn;
    if (normalize) {
        qn = normalize_with_norms(q_raw, qnorms);
        kn = normalize_with_norms(k_raw, knorms);
        q = &qn;
        k = &kn;
    }

    const bool want_grad = dq != nullptr && dk != nullptr;
    Matrix dqn, dkn;
    if (want_grad && normalize) {
        dqn = Matrix(n, m);
        dkn = Matrix(n, m);
    }
    Matrix* dq_t = normalize ? &dqn : dq;
    Matrix* dk_t = normalize ? &dkn : dk;
    // The normalized path accumulates into fresh buffers (chain rule applies
    // before adding into the caller's); the raw path adds in place.
    const double gscale = normalize ? 1.0 : scale;

    std::vector<double> loss_rows(n), lse(n);
    if (materialize_fits(n, ws)) {
        if (ws.logits.rows() != n || ws.logits.cols() != n) ws.logits = Matrix(n, n);
        kernels::gemm_nt(*q, *k, ws.logits);
#pragma omp parallel for schedule(static)
        for (std::int64_t ii = 0; ii < static_cast<std::int64_t>(n); ++ii) {
            const auto i = static_cast<std::size_t>(ii);
            double* row = ws.logits.row(i);
            double rm = row[0];
            for (std::size_t j = 1; j < n; ++j) rm = row[j] > rm ? row[j] : rm;
            double denom = 0.0;
            for (std::size_t j = 0; j < n; ++j) denom += std::exp((row[j] - rm) / tau);
            lse[i] = rm / tau + std::log(denom);
            loss_rows[i] = lse[i] - row[i] / tau;
            if (want_grad) {
                const double inv = 1.0 / denom;
                for (std::size_t j = 0; j < n; ++j) row[j] = std::exp((row[j] - rm) / tau) * inv;
            }
        }
        if (want_grad) {
            Matrix tmp(n, m);
            kernels::gemm_nn(ws.logits, *k, tmp);  // rows: sum_j P_ij k_j
#pragma omp parallel for schedule(static)
            for (std::int64_t ii = 0; ii < static_cast<std::int64_t>(n); ++ii) {
                const auto i = static_cast<std::size_t>(ii);
                double* out = dq_t->row(i);
                const double* ti = tmp.row(i);
                const double* ki = k->row(i);
                for (std::size_t c = 0; c < m; ++c) out[c] += gscale / tau * (ti[c] - ki[c]);
            }
            if (ws.pt.rows() != n || ws.pt.cols() != n) ws.pt = Matrix(n, n);
            kernels::transpose(ws.logits, ws.pt);
            kernels::gemm_nn(ws.pt, *q, tmp);  // rows: sum_i P_ij q_i
#pragma omp parallel for schedule(static)
            for (std::int64_t jj = 0; jj < static_cast<std::int64_t>(n); ++jj) {
                const auto j = static_cast<std::size_t>(jj);
                double* out = dk_t->row(j);
                const double* tj = tmp.row(j);
                const double* qj = q->row(j);
                for (std::size_t c = 0; c < m; ++c) out[c] += gscale / tau * (tj[c] - qj[c]);
            }
        }
    } else {
        // Streaming: one pass over anchors for the loss and dq, one pass
        // over candidates for dk. Each output row is owned by one thread.
#pragma omp parallel for schedule(static)
        for (std::int64_t ii = 0; ii < static_cast<std::int64_t>(n); ++ii) {
            const auto i = static_cast<std::size_t>(ii);
            std::vector<double> dots(n);
            const double* qi = q->row(i);
            for (std::size_t j = 0; j < n; ++j) dots[j] = kernels::dot(qi, k->row(j), m);
            double rm = dots[0];
            for (std::size_t j = 1; j < n; ++j) rm = dots[j] > rm ? dots[j] : rm;
            double denom = 0.0;
            for (std::size_t j = 0; j < n; ++j) denom += std::exp((dots[j] - rm) / tau);
            lse[i] = rm / tau + std::log(denom);
            loss_rows[i] = lse[i] - dots[i] / tau;
            if (want_grad) {
                double* out = dq_t->row(i);
                std::vector<double> acc(m, 0.0);
                for (std::size_t j = 0; j < n; ++j) {
                    const double p = std::exp(dots[j] / tau - lse[i]);
                    kernels::axpy(p, k->row(j), acc.data(), m);
                }
                for (std::size_t c = 0; c < m; ++c)
                    out[c] += gscale / tau * (acc[c] - k->row(i)[c]);
            }
        }
        if (want_grad) {
#pragma omp parallel for schedule(static)
            for (std::int64_t jj = 0; jj < static_cast<std::int64_t>(n); ++jj) {
                const auto j = static_cast<std::size_t>(jj);
                const double* kj = k->row(j);
                std::vector<double> acc(m, 0.0);
                for (std::size_t i = 0; i < n; ++i) {
                    const double p = std::exp(kernels::dot(q->row(i), kj, m) / tau - lse[i]);
                    kernels::axpy(p, q->row(i), acc.data(), m);
                }
                double* out = dk_t->row(j);
                for (std::size_t c = 0; c < m; ++c)
                    out[c] += gscale / tau * (acc[c] - q->row(j)[c]);
            }
        }
    }

    if (want_grad && normalize) {
        denormalize_grad(qn, qnorms, dqn);
        denormalize_grad(kn, knorms, dkn);
#pragma omp parallel for schedule(static)
        for (std::int64_t ii = 0; ii < static_cast<std::int64_t>(n); ++ii) {
            const auto i = static_cast<std::size_t>(ii);
            kernels::axpy(scale, dqn.row(i), dq->row(i), m);
            kernels::axpy(scale, dkn.row(i), dk->row(i), m);
        }
    }

    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) loss += loss_rows[i];
    return loss;
}

}  // namespace

double intra_loss(const ForwardTrace& t) {
    const std::size_t n = t.pos_z.size();
    if (n == 0) throw ParamError("intra_loss: empty trace");
    double acc = 0.0;
    // -ln sigma(z) = softplus(-z); -ln(1 - sigma(z)) = softplus(z).
    for (std::size_t i = 0; i < n; ++i) acc += softplus(-t.pos_z[i]) + softplus(t.neg_z[i]);
    return acc / (2.0 * static_cast<double>(n));
}

double infonce(const Matrix& q, const Matrix& k, double tau, bool normalize_rows) {
    ObjectiveWorkspace ws;
    return ctr(q, k, tau, normalize_rows, 1.0, nullptr, nullptr, ws);
}

double inter_loss(const ForwardTrace& t1, const ForwardTrace& t2, const LossOptions& opts) {
    ObjectiveWorkspace ws;
    const double feat =
        ctr(t1.h, t2.h, opts.tau, opts.normalize_infonce_rows, 1.0, nullptr, nullptr, ws);
    const Matrix s1 = score_matrix(t1, opts.score_contrast_mode);
    const Matrix s2 = score_matrix(t2, opts.score_contrast_mode);
    const double score =
        ctr(s1, s2, opts.tau, opts.normalize_infonce_rows, 1.0, nullptr, nullptr, ws);
    return feat + score;
}

LossBreakdown total_loss(const ForwardTrace& t1, const ForwardTrace& t2,
                         const LossOptions& opts) {
    LossBreakdown b;
    b.alpha = opts.alpha;
    if (!opts.disable_intra) {
        b.intra_v1 = intra_loss(t1);
        b.intra_v2 = intra_loss(t2);
    }
    if (!opts.disable_inter) {
        ObjectiveWorkspace ws;
        b.inter_feat =
            ctr(t1.h, t2.h, opts.tau, opts.normalize_infonce_rows, 1.0, nullptr, nullptr, ws);
        const Matrix s1 = score_matrix(t1, opts.score_contrast_mode);
        const Matrix s2 = score_matrix(t2, opts.score_contrast_mode);
        b.inter_score =
            ctr(s1, s2, opts.tau, opts.normalize_infonce_rows, 1.0, nullptr, nullptr, ws);
    }
    b.total = b.intra_v1 + b.intra_v2 + opts.alpha * (b.inter_feat + b.inter_score);
    return b;
}

namespace {

// Per-view backward below the score/embedding gradients. Adds this view's
// contribution to d_w_bil and leaves dxw for the caller (shared encoder
// weight gradient needs both views' dxw summed against one X^T).
void view_backward(const ForwardTrace& t, const ModelParams& params,
                   const std::vector<double>& dzp, const std::vector<double>& dzn, Matrix& dh,
                   Matrix& d_w_bil, Matrix& dxw) {
    const std::size_t n = t.pos.size();
    const std::size_t d = params.w_gcn.cols();

    // Negative-pair reverse lists: which anchors used node j as partner.
    std::vector<std::int64_t> neg_off(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i)
        ++neg_off[static_cast<std::size_t>(t.structure.neg_partner[i]) + 1];
    for (std::size_t j = 0; j < n; ++j) neg_off[j + 1] += neg_off[j];
    std::vector<std::int32_t> neg_rev(n);
    {
        std::vector<std::int64_t> cur(neg_off.begin(), neg_off.end() - 1);
        for (std::size_t i = 0; i < n; ++i)
            neg_rev[static_cast<std::size_t>(
                cur[static_cast<std::size_t>(t.structure.neg_partner[i])]++)] =
                static_cast<std::int32_t>(i);
    }

    // dG_i = dzp_i r_i + dzn_i r_{partner(i)}; G = H W^T.
    Matrix dg(n, d);
#pragma omp parallel for schedule(static)
    for (std::int64_t ii = 0; ii < static_cast<std::int64_t>(n); ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        double* out = dg.row(i);
        kernels::axpy(dzp[i], t.readout.row(i), out, d);
        kernels::axpy(dzn[i], t.readout.row(static_cast<std::size_t>(t.structure.neg_partner[i])),
                      out, d);
    }

    // dr_j = dzp_j G_j + sum over anchors i that drew j: dzn_i G_i.
    Matrix dr(n, d);
#pragma omp parallel for schedule(static)
    for (std::int64_t jj = 0; jj < static_cast<std::int64_t>(n); ++jj) {
        const auto j = static_cast<std::size_t>(jj);
        double* out = dr.row(j);
        kernels::axpy(dzp[j], t.g.row(j), out, d);
        for (std::int64_t e = neg_off[j]; e < neg_off[j + 1]; ++e) {
            const auto i = static_cast<std::size_t>(neg_rev[static_cast<std::size_t>(e)]);
            kernels::axpy(dzn[i], t.g.row(i), out, d);
        }
    }

    {
        Matrix dgt(d, n);
        kernels::transpose(dg, dgt);
        Matrix dwb(d, d);
        kernels::gemm_nn(dgt, t.masked ? t.self_h : t.h, dwb);
        for (std::size_t i = 0; i < d_w_bil.size(); ++i) d_w_bil.data()[i] += dwb.data()[i];
    }

    // The anchor inside G: dh += dG W unmasked; with masking the anchor is
    // relu(xw), so its gradient joins dxw directly at the end.
    Matrix danchor(n, d);
    kernels::gemm_nn(dg, params.w_bil, danchor);
    if (!t.masked) {
#pragma omp parallel for schedule(static)
        for (std::int64_t ii = 0; ii < static_cast<std::int64_t>(n); ++ii)
            kernels::axpy(1.0, danchor.row(static_cast<std::size_t>(ii)),
                          dh.row(static_cast<std::size_t>(ii)), d);
    }

    // Readout reverse lists: which anchors' sets contain node k, and at
    // which flat row (for the masked pre-activations).
    std::vector<std::int64_t> ro_off(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i)
        for (NodeId k : t.structure.rwr_sets[i]) ro_off[static_cast<std::size_t>(k) + 1]++;
    for (std::size_t k = 0; k < n; ++k) ro_off[k + 1] += ro_off[k];
    std::vector<std::int32_t> ro_anchor(static_cast<std::size_t>(ro_off[n]));
    std::vector<std::int64_t> ro_row(static_cast<std::size_t>(ro_off[n]));
    {
        std::vector<std::int64_t> cur(ro_off.begin(), ro_off.end() - 1);
        for (std::size_t i = 0; i < n; ++i) {
            const auto& set = t.structure.rwr_sets[i];
            for (std::size_t s = 0; s < set.size(); ++s) {
                const auto k = static_cast<std::size_t>(set[s]);
                const auto slot = static_cast<std::size_t>(cur[k]++);
                ro_anchor[slot] = static_cast<std::int32_t>(i);
                ro_row[slot] = t.masked ? t.mask_offsets[i] + static_cast<std::int64_t>(s) : 0;
            }
        }
    }

    Matrix dpre(n, d);
    if (!t.masked) {
        // dh_k += sum_i dr_i / |set_i| over sets containing k, then ReLU.
#pragma omp parallel for schedule(static)
        for (std::int64_t kk = 0; kk < static_cast<std::int64_t>(n); ++kk) {
            const auto k = static_cast<std::size_t>(kk);
            double* out = dh.row(k);
            for (std::int64_t e = ro_off[k]; e < ro_off[k + 1]; ++e) {
                const auto i =
                    static_cast<std::size_t>(ro_anchor[static_cast<std::size_t>(e)]);
                kernels::axpy(1.0 / static_cast<double>(t.structure.rwr_sets[i].size()),
                              dr.row(i), out, d);
            }
        }
        kernels::relu_backward(t.pre, dh, dpre);
    } else {
        kernels::relu_backward(t.pre, dh, dpre);
        // Masked readout terms flow through their own pre-activations.
#pragma omp parallel for schedule(static)
        for (std::int64_t kk = 0; kk < static_cast<std::int64_t>(n); ++kk) {
            const auto k = static_cast<std::size_t>(kk);
            double* out = dpre.row(k);
            for (std::int64_t e = ro_off[k]; e < ro_off[k + 1]; ++e) {
                const auto i =
                    static_cast<std::size_t>(ro_anchor[static_cast<std::size_t>(e)]);
                const double* mrow =
                    t.masked_pre.row(static_cast<std::size_t>(ro_row[static_cast<std::size_t>(e)]));
                const double* dri = dr.row(i);
                const double inv = 1.0 / static_cast<double>(t.structure.rwr_sets[i].size());
                for (std::size_t c = 0; c < d; ++c)
                    if (mrow[c] > 0.0) out[c] += inv * dri[c];
            }
        }
    }

    if (dxw.rows() != n || dxw.cols() != d) throw ParamError("view_backward: dxw shape");
    // pre = W_norm^L (XW) and W_norm is symmetric, so dxw = W_norm^L dpre.
    kernels::spmm(t.adj.view(), dpre, dxw);
    for (std::int64_t l = 1; l < t.gcn_layers; ++l) {
        Matrix tmp = dxw;
        kernels::spmm(t.adj.view(), tmp, dxw);
    }

    if (t.masked) {
        // Remove the masked-out feature contribution's gradient from dxw, and
        // add the self-anchor path relu(xw) straight into dxw.
#pragma omp parallel for schedule(static)
        for (std::int64_t ii = 0; ii < static_cast<std::int64_t>(n); ++ii) {
            const auto i = static_cast<std::size_t>(ii);
            const auto& set = t.structure.rwr_sets[i];
            double* out = dxw.row(i);
            const double inv = 1.0 / static_cast<double>(set.size());
            const double* dri = dr.row(i);
            for (std::size_t s = 0; s < set.size(); ++s) {
                const auto row = static_cast<std::size_t>(t.mask_offsets[i]) + s;
                const double* mrow = t.masked_pre.row(row);
                const double a = t.mask_adj[row];
                if (a == 0.0) continue;
                for (std::size_t c = 0; c < d; ++c)
                    if (mrow[c] > 0.0) out[c] -= a * inv * dri[c];
            }
            const double* xwi = t.xw.row(i);
            const double* dai = danchor.row(i);
            for (std::size_t c = 0; c < d; ++c)
                if (xwi[c] > 0.0) out[c] += dai[c];
        }
    }
}

}  // namespace

LossBreakdown backward(const ForwardTrace& t1, const ForwardTrace& t2, const ModelParams& params,
                       const Matrix& xt, const LossOptions& opts, GradientSet& grads,
                       ObjectiveWorkspace& ws) {
    const std::size_t n = t1.pos.size();
    if (t2.pos.size() != n) throw ParamError("backward: trace sizes differ");
    const std::size_t d = params.w_gcn.cols();
    const std::size_t f = params.w_gcn.rows();
    if (xt.rows() != f || xt.cols() != n) throw ParamError("backward: xt must be features^T");

    grads.d_w_gcn = Matrix(f, d);
    grads.d_w_bil = Matrix(d, d);

    LossBreakdown b;
    b.alpha = opts.alpha;
    const double inv2n = 1.0 / (2.0 * static_cast<double>(n));

    std::vector<double> dzp1(n, 0.0), dzn1(n, 0.0), dzp2(n, 0.0), dzn2(n, 0.0);
    if (!opts.disable_intra) {
        b.intra_v1 = intra_loss(t1);
        b.intra_v2 = intra_loss(t2);
        for (std::size_t i = 0; i < n; ++i) {
            dzp1[i] = -inv2n * (1.0 - t1.pos[i]);
            dzn1[i] = inv2n * t1.neg[i];
            dzp2[i] = -inv2n * (1.0 - t2.pos[i]);
            dzn2[i] = inv2n * t2.neg[i];
        }
    }

    Matrix dh1(n, d), dh2(n, d);
    if (!opts.disable_inter) {
        b.inter_feat = ctr(t1.h, t2.h, opts.tau, opts.normalize_infonce_rows, opts.alpha, &dh1,
                           &dh2, ws);
        const Matrix s1 = score_matrix(t1, opts.score_contrast_mode);
        const Matrix s2 = score_matrix(t2, opts.score_contrast_mode);
        Matrix ds1(s1.rows(), s1.cols()), ds2(s2.rows(), s2.cols());
        b.inter_score =
            ctr(s1, s2, opts.tau, opts.normalize_infonce_rows, opts.alpha, &ds1, &ds2, ws);
        const bool with_neg = opts.score_contrast_mode == ScoreContrastMode::PosNeg;
        for (std::size_t i = 0; i < n; ++i) {
            dzp1[i] += ds1(i, 0) * t1.pos[i] * (1.0 - t1.pos[i]);
            dzp2[i] += ds2(i, 0) * t2.pos[i] * (1.0 - t2.pos[i]);
            if (with_neg) {
                dzn1[i] += ds1(i, 1) * t1.neg[i] * (1.0 - t1.neg[i]);
                dzn2[i] += ds2(i, 1) * t2.neg[i] * (1.0 - t2.neg[i]);
            }
        }
    }
    b.total = b.intra_v1 + b.intra_v2 + opts.alpha * (b.inter_feat + b.inter_score);

    Matrix dxw1(n, d), dxw2(n, d);
    view_backward(t1, params, dzp1, dzn1, dh1, grads.d_w_bil, dxw1);
    view_backward(t2, params, dzp2, dzn2, dh2, grads.d_w_bil, dxw2);

    // Both views share X, so one product against X^T covers them.
    for (std::size_t i = 0; i < dxw1.size(); ++i) dxw1.data()[i] += dxw2.data()[i];
    kernels::gemm_nn(xt, dxw1, grads.d_w_gcn);
    return b;
}

}  // namespace adgcl
