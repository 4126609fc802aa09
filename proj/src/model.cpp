#include "adgcl/model.hpp"

#include <cmath>
#include <cstring>

#include "adgcl/error.hpp"
#include "adgcl/kernels.hpp"
#include "adgcl/sampling.hpp"

namespace adgcl {

ModelParams init_params(std::int64_t f, std::int64_t d, Rng& rng) {
    if (f < 1 || d < 1) throw ParamError("init_params: dimensions must be >= 1");
    ModelParams p;
    p.w_gcn = Matrix(static_cast<std::size_t>(f), static_cast<std::size_t>(d));
    p.w_bil = Matrix(static_cast<std::size_t>(d), static_cast<std::size_t>(d));
    const double lim_gcn = std::sqrt(6.0 / static_cast<double>(f + d));
    const double lim_bil = std::sqrt(6.0 / static_cast<double>(2 * d));
    for (std::size_t i = 0; i < p.w_gcn.size(); ++i)
        p.w_gcn.data()[i] = (2.0 * rng.next_double() - 1.0) * lim_gcn;
    for (std::size_t i = 0; i < p.w_bil.size(); ++i)
        p.w_bil.data()[i] = (2.0 * rng.next_double() - 1.0) * lim_bil;
    p.m_gcn = Matrix(p.w_gcn.rows(), p.w_gcn.cols());
    p.v_gcn = Matrix(p.w_gcn.rows(), p.w_gcn.cols());
    p.m_bil = Matrix(p.w_bil.rows(), p.w_bil.cols());
    p.v_bil = Matrix(p.w_bil.rows(), p.w_bil.cols());
    return p;
}

PairStructure sample_structure(const AttributedGraph& view, std::uint64_t seed,
                               double restart_prob, std::int64_t rwr_size) {
    if (view.n < 2) throw ParamError("sample_structure: need at least two nodes");
    PairStructure st;
    st.rwr_sets.resize(static_cast<std::size_t>(view.n));
    st.neg_partner.resize(static_cast<std::size_t>(view.n));
#pragma omp parallel for schedule(static)
    for (std::int64_t v = 0; v < view.n; ++v) {
        Rng walk_rng(derive_seed(seed, static_cast<std::uint64_t>(v), 1));
        st.rwr_sets[static_cast<std::size_t>(v)] =
            rwr_sample(view, static_cast<NodeId>(v), restart_prob, rwr_size, walk_rng);
        Rng neg_rng(derive_seed(seed, static_cast<std::uint64_t>(v), 2));
        auto j = neg_rng.next_below(static_cast<std::uint64_t>(view.n - 1));
        if (static_cast<std::int64_t>(j) >= v) ++j;
        st.neg_partner[static_cast<std::size_t>(v)] = static_cast<NodeId>(j);
    }
    return st;
}

EncodeResult encode(const AttributedGraph& view, const ModelParams& params,
                    std::int64_t gcn_layers) {
    if (gcn_layers < 1) throw ParamError("encode: layer count must be >= 1");
    if (static_cast<std::int64_t>(params.w_gcn.rows()) != view.feature_dim)
        throw ParamError("encode: weight rows do not match feature dim");
    EncodeResult r;
    const auto n = static_cast<std::size_t>(view.n);
    const std::size_t d = params.w_gcn.cols();
    r.xw = Matrix(n, d);
    kernels::gemm_nn(view.features, params.w_gcn, r.xw);
    const NormalizedAdjacency adj = normalized_adjacency(view);
    r.pre = Matrix(n, d);
    kernels::spmm(adj.view(), r.xw, r.pre);
    for (std::int64_t l = 1; l < gcn_layers; ++l) {
        Matrix next(n, d);
        kernels::spmm(adj.view(), r.pre, next);
        r.pre = std::move(next);
    }
    r.h = Matrix(n, d);
    kernels::relu(r.pre, r.h);
    return r;
}

Matrix readout_mean(const Matrix& h, const std::vector<std::vector<NodeId>>& sets) {
    // Validated ahead of the loop: an exception may not leave a parallel region.
    for (const auto& set : sets)
        if (set.empty()) throw ParamError("readout_mean: empty neighbor set");
    Matrix r(sets.size(), h.cols());
#pragma omp parallel for schedule(static)
    for (std::int64_t ii = 0; ii < static_cast<std::int64_t>(sets.size()); ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        const auto& set = sets[i];
        double* ri = r.row(i);
        for (NodeId k : set) kernels::axpy(1.0, h.row(static_cast<std::size_t>(k)), ri, h.cols());
        const double inv = 1.0 / static_cast<double>(set.size());
        for (std::size_t j = 0; j < h.cols(); ++j) ri[j] *= inv;
    }
    return r;
}

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

double discriminate(std::span<const double> r, std::span<const double> h, const Matrix& w_bil) {
    const std::size_t d = w_bil.rows();
    if (r.size() != d || h.size() != d || w_bil.cols() != d)
        throw ParamError("discriminate: dimension mismatch");
    // g[a] = dot(h, W_a) matches the batched h * W^T layout bit for bit.
    double z = 0.0;
    std::vector<double> g(d);
    for (std::size_t a = 0; a < d; ++a) g[a] = kernels::dot(h.data(), w_bil.row(a), d);
    z = kernels::dot(r.data(), g.data(), d);
    return sigmoid(z);
}

ForwardTrace forward_with_structure(const AttributedGraph& view, const ModelParams& params,
                                    PairStructure structure, const ForwardOptions& opts,
                                    const Matrix* shared_xw) {
    if (opts.mask_anchor && opts.gcn_layers != 1)
        throw ParamError("forward: anchor masking requires a single propagation layer");
    const auto n = static_cast<std::size_t>(view.n);
    const std::size_t d = params.w_gcn.cols();
    if (structure.rwr_sets.size() != n || structure.neg_partner.size() != n)
        throw ParamError("forward: structure size mismatch");

    ForwardTrace t;
    t.view = &view;
    t.adj = normalized_adjacency(view);
    if (shared_xw != nullptr) {
        if (shared_xw->rows() != n || shared_xw->cols() != d)
            throw ParamError("forward: shared XW shape mismatch");
        t.xw = *shared_xw;
    } else {
        t.xw = Matrix(n, d);
        kernels::gemm_nn(view.features, params.w_gcn, t.xw);
    }
    t.pre = Matrix(n, d);
    kernels::spmm(t.adj.view(), t.xw, t.pre);
    for (std::int64_t l = 1; l < opts.gcn_layers; ++l) {
        Matrix next(n, d);
        kernels::spmm(t.adj.view(), t.pre, next);
        t.pre = std::move(next);
    }
    t.h = Matrix(n, d);
    kernels::relu(t.pre, t.h);
    t.gcn_layers = opts.gcn_layers;
    t.structure = std::move(structure);

    if (opts.mask_anchor) {
        t.masked = true;
        t.mask_offsets.assign(n + 1, 0);
        for (std::size_t i = 0; i < n; ++i) {
            // Validated ahead of the loop: an exception may not leave a
            // parallel region.
            if (t.structure.rwr_sets[i].empty())
                throw ParamError("forward: empty neighbor set");
            t.mask_offsets[i + 1] =
                t.mask_offsets[i] + static_cast<std::int64_t>(t.structure.rwr_sets[i].size());
        }
        t.masked_pre = Matrix(static_cast<std::size_t>(t.mask_offsets[n]), d);
        t.mask_adj.resize(static_cast<std::size_t>(t.mask_offsets[n]));
        t.readout = Matrix(n, d);
#pragma omp parallel for schedule(static)
        for (std::int64_t ii = 0; ii < static_cast<std::int64_t>(n); ++ii) {
            const auto i = static_cast<std::size_t>(ii);
            const auto& set = t.structure.rwr_sets[i];
            double* ri = t.readout.row(i);
            std::memset(ri, 0, d * sizeof(double));
            std::int64_t row = t.mask_offsets[i];
            const double* xwi = t.xw.row(i);
            for (NodeId k : set) {
                // Remove i's feature contribution from k's pre-activation
                // before the nonlinearity; exact for one propagation.
                const double aki = t.adj.entry(k, static_cast<NodeId>(i));
                t.mask_adj[static_cast<std::size_t>(row)] = aki;
                double* mrow = t.masked_pre.row(static_cast<std::size_t>(row));
                const double* prek = t.pre.row(static_cast<std::size_t>(k));
                for (std::size_t c = 0; c < d; ++c) {
                    mrow[c] = prek[c] - aki * xwi[c];
                    ri[c] += mrow[c] > 0.0 ? mrow[c] : 0.0;
                }
                ++row;
            }
            const double inv = 1.0 / static_cast<double>(set.size());
            for (std::size_t c = 0; c < d; ++c) ri[c] *= inv;
        }
    } else {
        t.readout = readout_mean(t.h, t.structure.rwr_sets);
    }

    t.g = Matrix(n, d);
    if (opts.mask_anchor) {
        t.self_h = Matrix(n, d);
        kernels::relu(t.xw, t.self_h);
        kernels::gemm_nt(t.self_h, params.w_bil, t.g);
    } else {
        kernels::gemm_nt(t.h, params.w_bil, t.g);
    }
    t.pos_z.resize(n);
    t.neg_z.resize(n);
    t.pos.resize(n);
    t.neg.resize(n);
#pragma omp parallel for schedule(static)
    for (std::int64_t ii = 0; ii < static_cast<std::int64_t>(n); ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        const auto j = static_cast<std::size_t>(t.structure.neg_partner[i]);
        t.pos_z[i] = kernels::dot(t.readout.row(i), t.g.row(i), d);
        t.neg_z[i] = kernels::dot(t.readout.row(j), t.g.row(i), d);
        t.pos[i] = sigmoid(t.pos_z[i]);
        t.neg[i] = sigmoid(t.neg_z[i]);
    }
    return t;
}

ForwardTrace forward_view(const AttributedGraph& view, const ModelParams& params,
                          std::uint64_t seed, const ForwardOptions& opts,
                          const Matrix* shared_xw) {
    return forward_with_structure(view, params,
                                  sample_structure(view, seed, opts.restart_prob, opts.rwr_size),
                                  opts, shared_xw);
}

}  // namespace adgcl
