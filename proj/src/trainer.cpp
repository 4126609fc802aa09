#include "adgcl/trainer.hpp"

#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>

#include "adgcl/error.hpp"
#include "adgcl/kernels.hpp"
#include "adgcl/log.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace adgcl {

void adam_step(ModelParams& p, const GradientSet& g, double lr, double beta1, double beta2,
               double eps) {
    if (!g.d_w_gcn.same_shape(p.w_gcn) || !g.d_w_bil.same_shape(p.w_bil))
        throw ParamError("adam_step: gradient shape mismatch");
    for (const Matrix* grad : {&g.d_w_gcn, &g.d_w_bil})
        for (std::size_t i = 0; i < grad->size(); ++i)
            if (!std::isfinite(grad->data()[i]))
                throw TrainingError("adam_step: non-finite gradient at step " +
                                    std::to_string(p.adam_step + 1));
    ++p.adam_step;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(p.adam_step));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(p.adam_step));
    const auto update = [&](Matrix& w, Matrix& m, Matrix& v, const Matrix& grad) {
        double* wp = w.data();
        double* mp = m.data();
        double* vp = v.data();
        const double* gp = grad.data();
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < static_cast<std::int64_t>(w.size()); ++i) {
            mp[i] = beta1 * mp[i] + (1.0 - beta1) * gp[i];
            vp[i] = beta2 * vp[i] + (1.0 - beta2) * gp[i] * gp[i];
            wp[i] -= lr * (mp[i] / bc1) / (std::sqrt(vp[i] / bc2) + eps);
        }
    };
    update(p.w_gcn, p.m_gcn, p.v_gcn, g.d_w_gcn);
    update(p.w_bil, p.m_bil, p.v_bil, g.d_w_bil);
}

namespace {

// Substream tags; distinct per purpose so disabling one component never
// shifts another's randomness.
constexpr std::uint64_t kSeedInit = 0x01;
constexpr std::uint64_t kSeedView1 = 0x02;
constexpr std::uint64_t kSeedView2 = 0x03;
constexpr std::uint64_t kSeedStruct1 = 0x04;
constexpr std::uint64_t kSeedStruct2 = 0x05;

}  // namespace

TrainResult train(const AttributedGraph& g, const io::ResolvedConfig& cfg,
                  const TrainHooks* hooks) {
    if (g.n < 2) throw ParamError("train: need at least two nodes");
    if (g.feature_dim < 1) throw ParamError("train: graph has no features");

    Rng init_rng(derive_seed(cfg.seed, 0, kSeedInit));
    TrainResult res;
    res.params = init_params(g.feature_dim, cfg.d, init_rng);
    res.window = ScoreWindow(g.n, cfg.w);
    if (cfg.epochs == 0) return res;

    const DegreePartition part = partition_by_degree(g, cfg.k_threshold);
    const Matrix nf = l2_normalize_features(g);
    FeatureSimilarity sim(nf);
    const bool augmenting = !cfg.disable_np || !cfg.disable_nc;
    if (augmenting &&
        static_cast<std::size_t>(g.n) * static_cast<std::size_t>(g.n) * sizeof(double) <=
            ObjectiveWorkspace::kMaterializeBytes)
        sim.precompute();

    Matrix xt(g.features.cols(), g.features.rows());
    kernels::transpose(g.features, xt);

    ForwardOptions fopts;
    fopts.restart_prob = cfg.restart_prob;
    fopts.rwr_size = cfg.rwr_size;
    fopts.gcn_layers = cfg.gcn_layers;
    fopts.mask_anchor = cfg.mask_anchor;

    LossOptions lopts;
    lopts.tau = cfg.tau;
    // The alignment terms sum over nodes while the discrimination term
    // averages, so the raw ratio grows with n. Dividing the trade-off weight
    // by n makes it balance per-node quantities at any graph size.
    lopts.alpha = cfg.alpha / static_cast<double>(g.n);
    lopts.disable_intra = cfg.disable_intra;
    lopts.disable_inter = cfg.disable_inter;
    lopts.normalize_infonce_rows = cfg.normalize_infonce_rows;
    lopts.score_contrast_mode =
        cfg.score_pos_only ? ScoreContrastMode::PosOnly : ScoreContrastMode::PosNeg;

    ObjectiveWorkspace ws;
    GradientSet grads;
    Matrix xw(static_cast<std::size_t>(g.n), static_cast<std::size_t>(cfg.d));
    std::vector<double> win_pos(static_cast<std::size_t>(g.n));
    std::vector<double> win_neg(static_cast<std::size_t>(g.n));

    for (std::int64_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        const int stage = epoch <= cfg.stage_switch_epoch ? 1 : 2;

        // A completed pair needs at least one recorded epoch of scores; the
        // stage schedule guarantees that, and the window guard keeps the
        // fallback explicit.
        const bool complete_now =
            stage == 2 && !cfg.disable_nc && res.window.filled_epochs() >= 1;

        AttributedGraph v1, v2;
        const AttributedGraph* view1 = &g;
        const AttributedGraph* view2 = &g;
        if (complete_now) {
            v1 = build_completed_view(g, res.window, part, sim,
                                      derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch),
                                                  kSeedView1));
            view1 = &v1;
            if (cfg.stage2_views == io::Stage2Views::CompletionPair) {
                v2 = build_completed_view(g, res.window, part, sim,
                                          derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch),
                                                      kSeedView2));
                view2 = &v2;
            } else if (!cfg.disable_np) {
                v2 = build_pruned_view(g, part, sim,
                                       derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch),
                                                   kSeedView2));
                view2 = &v2;
            }
        } else if (!cfg.disable_np) {
            v2 = build_pruned_view(g, part, sim,
                                   derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch),
                                               kSeedView2));
            view2 = &v2;
        }
        if (hooks != nullptr && hooks->on_views) hooks->on_views(epoch, stage, *view1, *view2);

        // Views rewire edges but share X, so X W_gcn is computed once.
        kernels::gemm_nn(g.features, res.params.w_gcn, xw);
        ForwardTrace tr1 = forward_view(
            *view1, res.params,
            derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch), kSeedStruct1), fopts, &xw);
        ForwardTrace tr2 = forward_view(
            *view2, res.params,
            derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch), kSeedStruct2), fopts, &xw);

        const LossBreakdown b = backward(tr1, tr2, res.params, xt, lopts, grads, ws);
        if (!std::isfinite(b.total))
            throw TrainingError("epoch " + std::to_string(epoch) + ": loss is not finite");
        adam_step(res.params, grads, cfg.learning_rate);

        for (std::int64_t i = 0; i < g.n; ++i) {
            win_pos[static_cast<std::size_t>(i)] =
                tr1.pos[static_cast<std::size_t>(i)] + tr2.pos[static_cast<std::size_t>(i)];
            win_neg[static_cast<std::size_t>(i)] =
                tr1.neg[static_cast<std::size_t>(i)] + tr2.neg[static_cast<std::size_t>(i)];
        }
        res.window.push(win_pos, win_neg);

        const auto t1 = std::chrono::steady_clock::now();
        EpochRecord rec;
        rec.epoch = epoch;
        rec.stage = stage;
        rec.intra = b.intra();
        rec.inter_feat = b.inter_feat;
        rec.inter_score = b.inter_score;
        rec.total = b.total;
        rec.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
        res.log.push_back(rec);
        ADGCL_LOG_DEBUG("epoch %lld stage %d total %.6f intra %.6f", (long long)epoch, stage,
                        b.total, b.intra());
    }
    return res;
}

namespace {

constexpr char kMagic[8] = {'A', 'D', 'G', 'C', 'L', 'C', 'K', 'P'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::FILE* f, std::uint32_t v) { std::fwrite(&v, sizeof(v), 1, f); }
void put_u64(std::FILE* f, std::uint64_t v) { std::fwrite(&v, sizeof(v), 1, f); }

void put_matrix(std::FILE* f, const Matrix& m) {
    std::fwrite(m.data(), sizeof(double), m.size(), f);
}

void take(std::FILE* f, void* dst, std::size_t bytes, const std::string& path) {
    if (std::fread(dst, 1, bytes, f) != bytes)
        throw CheckpointError("checkpoint " + path + " is truncated");
}

}  // namespace

void save_checkpoint(const ModelParams& p, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (f == nullptr) throw IoError("cannot open " + path + " for writing");
    std::fwrite(kMagic, 1, sizeof(kMagic), f);
    put_u32(f, kVersion);
    put_u32(f, 0);
    put_u64(f, p.w_gcn.rows());
    put_u64(f, p.w_gcn.cols());
    put_u64(f, static_cast<std::uint64_t>(p.adam_step));
    put_matrix(f, p.w_gcn);
    put_matrix(f, p.w_bil);
    put_matrix(f, p.m_gcn);
    put_matrix(f, p.v_gcn);
    put_matrix(f, p.m_bil);
    put_matrix(f, p.v_bil);
    if (std::fclose(f) != 0) throw IoError("write failure on " + path);
}

ModelParams load_checkpoint(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (f == nullptr) throw CheckpointError("cannot open checkpoint " + path);
    struct Closer {
        std::FILE* f;
        ~Closer() { std::fclose(f); }
    } closer{f};

    char magic[8];
    take(f, magic, sizeof(magic), path);
    if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw CheckpointError("checkpoint " + path + " has wrong magic bytes");
    std::uint32_t version = 0, flags = 0;
    take(f, &version, sizeof(version), path);
    take(f, &flags, sizeof(flags), path);
    if (version != kVersion)
        throw CheckpointError("checkpoint " + path + " has unsupported version " +
                              std::to_string(version));
    std::uint64_t fdim = 0, d = 0, step = 0;
    take(f, &fdim, sizeof(fdim), path);
    take(f, &d, sizeof(d), path);
    take(f, &step, sizeof(step), path);
    if (fdim == 0 || d == 0 || fdim > (1u << 30) || d > (1u << 20))
        throw CheckpointError("checkpoint " + path + " has implausible dimensions");

    ModelParams p;
    p.adam_step = static_cast<std::int64_t>(step);
    const auto read_matrix = [&](std::size_t r, std::size_t c) {
        Matrix m(r, c);
        take(f, m.data(), m.size() * sizeof(double), path);
        return m;
    };
    p.w_gcn = read_matrix(fdim, d);
    p.w_bil = read_matrix(d, d);
    p.m_gcn = read_matrix(fdim, d);
    p.v_gcn = read_matrix(fdim, d);
    p.m_bil = read_matrix(d, d);
    p.v_bil = read_matrix(d, d);
    char extra;
    if (std::fread(&extra, 1, 1, f) == 1)
        throw CheckpointError("checkpoint " + path + " has trailing bytes");
    return p;
}

}  // namespace adgcl
