#include "adgcl/augment.hpp"

#include <algorithm>
#include <cstring>

#include "adgcl/error.hpp"
#include "adgcl/kernels.hpp"
#include "adgcl/sampling.hpp"

namespace adgcl {

ScoreWindow::ScoreWindow(std::int64_t n, std::int64_t w) : n_(n), w_(w) {
    if (n < 0) throw ParamError("ScoreWindow: negative node count");
    if (w < 1) throw ParamError("ScoreWindow: window length must be >= 1");
    data_ = Matrix(static_cast<std::size_t>(n), static_cast<std::size_t>(2 * w));
}

void ScoreWindow::push(std::span<const double> pos, std::span<const double> neg) {
    if (static_cast<std::int64_t>(pos.size()) != n_ || static_cast<std::int64_t>(neg.size()) != n_)
        throw ParamError("ScoreWindow::push: score vector length mismatch");
    for (std::int64_t v = 0; v < n_; ++v)
        if (!(pos[v] >= 0.0 && pos[v] <= 2.0 && neg[v] >= 0.0 && neg[v] <= 2.0))
            throw ParamError("ScoreWindow::push: score outside [0, 2]");
    const std::size_t w2 = static_cast<std::size_t>(2 * w_);
#pragma omp parallel for schedule(static)
    for (std::int64_t v = 0; v < n_; ++v) {
        double* r = data_.row(static_cast<std::size_t>(v));
        std::memmove(r, r + 2, (w2 - 2) * sizeof(double));
        r[w2 - 2] = pos[v];
        r[w2 - 1] = neg[v];
    }
    if (filled_ < w_) ++filled_;
}

void ScoreWindow::restore(Matrix data, std::int64_t filled) {
    if (data.cols() % 2 != 0 || data.cols() == 0)
        throw ParamError("ScoreWindow::restore: column count must be a positive multiple of 2");
    if (filled < 0 || filled > static_cast<std::int64_t>(data.cols()) / 2)
        throw ParamError("ScoreWindow::restore: filled epoch count out of range");
    n_ = static_cast<std::int64_t>(data.rows());
    w_ = static_cast<std::int64_t>(data.cols()) / 2;
    filled_ = filled;
    data_ = std::move(data);
}

// Unfilled leading pairs are exactly zero, so the full-row dot equals the
// dot over the filled suffix.
double anomaly_similarity(const ScoreWindow& sw, NodeId u, NodeId v) {
    const auto ru = sw.row(u);
    const auto rv = sw.row(v);
    return kernels::dot(ru.data(), rv.data(), ru.size());
}

void FeatureSimilarity::precompute() {
    const std::size_t n = nf_->rows();
    cache_ = Matrix(n, n);
    kernels::gemm_nt(*nf_, *nf_, cache_);
}

void FeatureSimilarity::row(NodeId v, std::span<double> out) const {
    const std::size_t n = nf_->rows();
    if (out.size() != n) throw ParamError("FeatureSimilarity::row: output length mismatch");
    if (cache_.rows() == n) {
        std::memcpy(out.data(), cache_.row(static_cast<std::size_t>(v)), n * sizeof(double));
        return;
    }
    const double* xv = nf_->row(static_cast<std::size_t>(v));
    for (std::size_t u = 0; u < n; ++u)
        out[u] = kernels::dot(nf_->row(u), xv, nf_->cols());
}

double FeatureSimilarity::pair(NodeId u, NodeId v) const {
    if (cache_.rows() == nf_->rows())
        return cache_(static_cast<std::size_t>(u), static_cast<std::size_t>(v));
    return kernels::dot(nf_->row(static_cast<std::size_t>(u)),
                        nf_->row(static_cast<std::size_t>(v)), nf_->cols());
}

std::vector<NodeId> prune_head_node(const AttributedGraph& g, NodeId u, std::int64_t k,
                                    const FeatureSimilarity& sim, Rng& rng) {
    if (k < 1) throw ParamError("prune_head_node: k must be >= 1");
    if (g.degree(u) <= k)
        throw ParamError("prune_head_node: node " + std::to_string(u) +
                         " has degree <= k and needs no pruning");
    const auto nb = g.neighbors(u);
    const auto keep = static_cast<std::size_t>(k);
    std::vector<double> w(nb.size());
    for (std::size_t i = 0; i < nb.size(); ++i) {
        // Anti-correlated neighbors get zero weight; the uniform 1/|N_u|
        // factor scales all weights equally and cancels in the draw.
        const double c = sim.pair(u, nb[i]);
        w[i] = c > 0.0 ? c : 0.0;
    }
    std::vector<std::size_t> picked;
    picked.reserve(keep);
    sample_weighted_wor(w, keep, rng, picked);
    std::vector<NodeId> out;
    out.reserve(keep);
    for (std::size_t i : picked) out.push_back(nb[i]);
    return out;
}

AttributedGraph build_pruned_view(const AttributedGraph& g, const DegreePartition& part,
                                  const FeatureSimilarity& sim, std::uint64_t seed) {
    const std::size_t n_heads = part.head_nodes.size();
    std::vector<std::vector<NodeId>> kept(n_heads);
#pragma omp parallel for schedule(static)
    for (std::int64_t hi = 0; hi < static_cast<std::int64_t>(n_heads); ++hi) {
        const NodeId u = part.head_nodes[static_cast<std::size_t>(hi)];
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(u)));
        auto nodes = prune_head_node(g, u, part.k_threshold, sim, rng);
        std::sort(nodes.begin(), nodes.end());
        kept[static_cast<std::size_t>(hi)] = std::move(nodes);
    }

    std::vector<std::int64_t> kept_index(static_cast<std::size_t>(g.n), -1);
    for (std::size_t hi = 0; hi < n_heads; ++hi)
        kept_index[static_cast<std::size_t>(part.head_nodes[hi])] = static_cast<std::int64_t>(hi);

    const auto sampled = [&](NodeId holder, NodeId target) {
        const auto& list = kept[static_cast<std::size_t>(kept_index[holder])];
        return std::binary_search(list.begin(), list.end(), target);
    };

    // Tail endpoints keep every edge; a head endpoint keeps only sampled
    // neighbors; a head-head edge survives when either side sampled it.
    std::vector<Edge> edges;
    for (NodeId u = 0; u < g.n; ++u) {
        for (NodeId v : g.neighbors(u)) {
            if (u >= v) continue;
            const bool hu = part.head(u), hv = part.head(v);
            bool survive;
            if (!hu && !hv)
                survive = true;
            else if (hu && !hv)
                survive = sampled(u, v);
            else if (!hu && hv)
                survive = sampled(v, u);
            else
                survive = sampled(u, v) || sampled(v, u);
            if (survive) edges.emplace_back(u, v);
        }
    }
    return build_graph(edges, g.features);
}

AuxiliaryChoice sample_auxiliary(const ScoreWindow& sw, const FeatureSimilarity& sim, NodeId v,
                                 Rng& rng) {
    const std::int64_t n = sim.n();
    if (n < 2) throw ParamError("sample_auxiliary: need at least two nodes");
    if (sw.n() != n) throw ParamError("sample_auxiliary: window size mismatch");
    std::vector<double> cos_row(static_cast<std::size_t>(n));
    sim.row(v, cos_row);
    std::vector<double> w(static_cast<std::size_t>(n), 0.0);
    double total = 0.0, w_max = 0.0;
    for (NodeId u = 0; u < n; ++u) {
        if (u == v) continue;
        const double c = cos_row[static_cast<std::size_t>(u)];
        if (c <= 0.0) continue;
        const double s = anomaly_similarity(sw, u, v);
        if (s <= 0.0) continue;
        const double x = c * s;
        w[static_cast<std::size_t>(u)] = x;
        total += x;
        if (x > w_max) w_max = x;
    }
    AuxiliaryChoice out;
    if (total > 0.0) {
        out.node = static_cast<NodeId>(sample_weighted(w, total, rng));
        out.phi = 0.5 * w[static_cast<std::size_t>(out.node)] / w_max;
    } else {
        // No informative candidate: uniform auxiliary, midpoint mixing.
        std::uint64_t pick = rng.next_below(static_cast<std::uint64_t>(n - 1));
        if (static_cast<NodeId>(pick) >= v) ++pick;
        out.node = static_cast<NodeId>(pick);
        out.phi = 0.25;
    }
    return out;
}

EmpiricalDegrees::EmpiricalDegrees(const AttributedGraph& g) {
    degrees_.reserve(static_cast<std::size_t>(g.n));
    for (NodeId v = 0; v < g.n; ++v) degrees_.push_back(g.degree(v));
}

std::int64_t EmpiricalDegrees::sample(Rng& rng) const {
    if (degrees_.empty()) throw ParamError("EmpiricalDegrees: empty reference graph");
    return degrees_[rng.next_below(degrees_.size())];
}

namespace {

// One mixture term: normalized completion weights over N_x \ {excluded}.
// All-zero weights renormalize to uniform over the support.
void mixture_term(const AttributedGraph& g, const ScoreWindow& sw, const FeatureSimilarity& sim,
                  NodeId x, NodeId excluded, std::vector<NodeId>& support,
                  std::vector<double>& probs) {
    support.clear();
    probs.clear();
    for (NodeId u : g.neighbors(x)) {
        if (u == excluded) continue;
        support.push_back(u);
        const double c = sim.pair(u, x);
        const double s = anomaly_similarity(sw, u, x);
        const double w = (c > 0.0 && s > 0.0) ? c * s : 0.0;
        probs.push_back(w);
    }
    double total = 0.0;
    for (double p : probs) total += p;
    if (total > 0.0) {
        for (double& p : probs) p /= total;
    } else if (!probs.empty()) {
        const double u = 1.0 / static_cast<double>(probs.size());
        for (double& p : probs) p = u;
    }
}

}  // namespace

MixedNeighborhood complete_tail_node(const AttributedGraph& g, const ScoreWindow& sw,
                                     const FeatureSimilarity& sim, NodeId v,
                                     const EmpiricalDegrees& deg_dist, Rng& rng) {
    if (sw.filled_epochs() < 1)
        throw ParamError("complete_tail_node: score window is empty");
    MixedNeighborhood out;
    out.anchor = v;
    const AuxiliaryChoice aux = sample_auxiliary(sw, sim, v, rng);
    out.auxiliary = aux.node;
    out.phi = aux.phi;

    std::vector<NodeId> sup_v, sup_a;
    std::vector<double> p_v, p_a;
    mixture_term(g, sw, sim, v, v, sup_v, p_v);
    mixture_term(g, sw, sim, aux.node, v, sup_a, p_a);

    double phi = aux.phi;
    if (sup_v.empty() && sup_a.empty()) {
        // Anchor and auxiliary both contribute nothing; degenerate to the
        // auxiliary itself so the completed neighborhood is never empty.
        out.support = {aux.node};
        out.probs = {1.0};
    } else {
        if (sup_v.empty()) phi = 1.0;
        if (sup_a.empty()) phi = 0.0;
        std::vector<double> mixed(static_cast<std::size_t>(g.n), 0.0);
        for (std::size_t i = 0; i < sup_v.size(); ++i)
            mixed[static_cast<std::size_t>(sup_v[i])] += (1.0 - phi) * p_v[i];
        for (std::size_t i = 0; i < sup_a.size(); ++i)
            mixed[static_cast<std::size_t>(sup_a[i])] += phi * p_a[i];
        for (NodeId u = 0; u < g.n; ++u) {
            if (mixed[static_cast<std::size_t>(u)] > 0.0) {
                out.support.push_back(u);
                out.probs.push_back(mixed[static_cast<std::size_t>(u)]);
            }
        }
        if (out.support.empty()) {
            // Possible when a zero-probability support collapses under phi
            // pinning; same degenerate fallback.
            out.support = {aux.node};
            out.probs = {1.0};
        }
    }

    const std::int64_t deg_v = g.degree(v);
    std::int64_t m = std::max<std::int64_t>({deg_dist.sample(rng), deg_v, 1});
    m = std::min<std::int64_t>(m, static_cast<std::int64_t>(out.support.size()));

    std::vector<std::size_t> picked;
    picked.reserve(static_cast<std::size_t>(m));
    sample_weighted_wor(out.probs, static_cast<std::size_t>(m), rng, picked);
    for (std::size_t i : picked) out.draws.push_back(out.support[i]);

    out.sampled_neighbors.assign(out.draws.begin(), out.draws.end());
    const auto nb = g.neighbors(v);
    out.sampled_neighbors.insert(out.sampled_neighbors.end(), nb.begin(), nb.end());
    std::sort(out.sampled_neighbors.begin(), out.sampled_neighbors.end());
    out.sampled_neighbors.erase(
        std::unique(out.sampled_neighbors.begin(), out.sampled_neighbors.end()),
        out.sampled_neighbors.end());
    return out;
}

AttributedGraph build_completed_view(const AttributedGraph& g, const ScoreWindow& sw,
                                     const DegreePartition& part, const FeatureSimilarity& sim,
                                     std::uint64_t seed) {
    const EmpiricalDegrees deg_dist(g);
    const std::size_t n_tails = part.tail_nodes.size();
    std::vector<std::vector<NodeId>> added(n_tails);
#pragma omp parallel for schedule(static)
    for (std::int64_t ti = 0; ti < static_cast<std::int64_t>(n_tails); ++ti) {
        const NodeId v = part.tail_nodes[static_cast<std::size_t>(ti)];
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(v)));
        auto mixed = complete_tail_node(g, sw, sim, v, deg_dist, rng);
        added[static_cast<std::size_t>(ti)] = std::move(mixed.sampled_neighbors);
    }

    std::vector<Edge> edges = g.edge_list();
    for (std::size_t ti = 0; ti < n_tails; ++ti) {
        const NodeId v = part.tail_nodes[ti];
        for (NodeId u : added[ti]) edges.emplace_back(std::min(u, v), std::max(u, v));
    }
    return build_graph(edges, g.features);
}

}  // namespace adgcl
