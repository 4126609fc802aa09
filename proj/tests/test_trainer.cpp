#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "adgcl/error.hpp"
#include "adgcl/graph.hpp"
#include "adgcl/model.hpp"
#include "adgcl/objective.hpp"
#include "adgcl/rng.hpp"
#include "adgcl/trainer.hpp"
#include "doctest.h"
#include "synthetic.hpp"

using namespace adgcl;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("adgcl_trainer_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    static int& counter() {
        static int c = 0;
        return c;
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

io::ResolvedConfig tiny_config() {
    io::ResolvedConfig cfg;
    cfg.dataset = "unit";
    cfg.d = 6;
    cfg.w = 3;
    cfg.k_threshold = 4;
    cfg.learning_rate = 5e-3;
    cfg.epochs = 8;
    cfg.stage_switch_epoch = 4;
    cfg.rwr_size = 3;
    cfg.seed = 11;
    return cfg;
}

GradientSet grads_like(const ModelParams& p) {
    GradientSet g;
    g.d_w_gcn = Matrix(p.w_gcn.rows(), p.w_gcn.cols());
    g.d_w_bil = Matrix(p.w_bil.rows(), p.w_bil.cols());
    return g;
}

bool same_bits(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a.data()[i] != b.data()[i]) return false;
    return true;
}

}  // namespace

TEST_CASE("adam with zero gradients counts the step but moves nothing") {
    Rng rng(1);
    ModelParams p = init_params(4, 3, rng);
    const Matrix before = p.w_gcn;
    const GradientSet g = grads_like(p);
    adam_step(p, g, 0.1);
    CHECK(p.adam_step == 1);
    CHECK(same_bits(p.w_gcn, before));
}

TEST_CASE("first adam step moves by the learning rate against the sign") {
    Rng rng(2);
    ModelParams p = init_params(3, 2, rng);
    const Matrix before = p.w_gcn;
    GradientSet g = grads_like(p);
    g.d_w_gcn(0, 0) = 4.0;
    g.d_w_gcn(1, 1) = -0.5;
    adam_step(p, g, 0.01);
    // Bias-corrected m/sqrt(v) is sign(g) on the first step.
    CHECK(p.w_gcn(0, 0) == doctest::Approx(before(0, 0) - 0.01).epsilon(1e-6));
    CHECK(p.w_gcn(1, 1) == doctest::Approx(before(1, 1) + 0.01).epsilon(1e-6));
    CHECK(p.w_gcn(2, 0) == before(2, 0));
}

TEST_CASE("adam rejects malformed gradients") {
    Rng rng(3);
    ModelParams p = init_params(4, 3, rng);

    GradientSet wrong;
    wrong.d_w_gcn = Matrix(4, 2);
    wrong.d_w_bil = Matrix(3, 3);
    CHECK_THROWS_AS(adam_step(p, wrong, 0.1), ParamError);

    GradientSet bad = grads_like(p);
    bad.d_w_gcn(0, 0) = std::nan("");
    CHECK_THROWS_AS(adam_step(p, bad, 0.1), TrainingError);
    bad.d_w_gcn(0, 0) = HUGE_VAL;
    CHECK_THROWS_AS(adam_step(p, bad, 0.1), TrainingError);
    CHECK(p.adam_step == 0);  // failed steps do not advance the counter
}

TEST_CASE("adam descends a quadratic") {
    Rng rng(4);
    ModelParams p = init_params(1, 1, rng);
    p.w_gcn(0, 0) = -2.0;
    p.w_bil(0, 0) = 0.0;
    GradientSet g = grads_like(p);
    for (int step = 0; step < 800; ++step) {
        g.d_w_gcn(0, 0) = 2.0 * (p.w_gcn(0, 0) - 3.0);
        adam_step(p, g, 0.05);
    }
    CHECK(p.w_gcn(0, 0) == doctest::Approx(3.0).epsilon(1e-3));
}

TEST_CASE("training zero epochs only initializes") {
    const AttributedGraph g = testsupport::make_small_graph(20, 5, 40, 7);
    io::ResolvedConfig cfg = tiny_config();
    cfg.epochs = 0;
    cfg.stage_switch_epoch = 0;
    const TrainResult r = train(g, cfg);
    CHECK(r.log.empty());
    CHECK(r.params.adam_step == 0);
    CHECK(r.window.filled_epochs() == 0);

    Rng rng(derive_seed(cfg.seed, 0, 1));
    const ModelParams fresh = init_params(5, cfg.d, rng);
    CHECK(same_bits(r.params.w_gcn, fresh.w_gcn));
    CHECK(same_bits(r.params.w_bil, fresh.w_bil));
}

TEST_CASE("window fill tracks epochs up to its length") {
    const AttributedGraph g = testsupport::make_small_graph(20, 5, 40, 7);
    io::ResolvedConfig cfg = tiny_config();
    cfg.epochs = 2;
    cfg.stage_switch_epoch = 1;
    CHECK(train(g, cfg).window.filled_epochs() == 2);
    cfg.epochs = 8;
    cfg.stage_switch_epoch = 4;
    CHECK(train(g, cfg).window.filled_epochs() == 3);  // w = 3
}

TEST_CASE("stage schedule drives the contrastive views") {
    const AttributedGraph g = testsupport::make_small_graph(40, 5, 160, 9);
    io::ResolvedConfig cfg = tiny_config();
    const auto original = g.edge_list();

    SUBCASE("default: original vs pruned, then completion pair") {
        std::vector<int> stages;
        TrainHooks hooks;
        hooks.on_views = [&](std::int64_t epoch, int stage, const AttributedGraph& v1,
                             const AttributedGraph& v2) {
            stages.push_back(stage);
            if (stage == 1) {
                CHECK(v1.edge_list() == original);
                CHECK(v2.edge_count() < g.edge_count());
                for (const Edge& e : v2.edge_list()) CHECK(g.has_edge(e.first, e.second));
            } else {
                // Both completion views keep the original edges and add more.
                CHECK(v1.edge_count() >= g.edge_count());
                CHECK(v2.edge_count() >= g.edge_count());
                for (const Edge& e : original) {
                    CHECK(v1.has_edge(e.first, e.second));
                    CHECK(v2.has_edge(e.first, e.second));
                }
                CHECK(v1.edge_list() != v2.edge_list());
            }
            CHECK(stage == (epoch <= 4 ? 1 : 2));
        };
        train(g, cfg, &hooks);
        CHECK(stages == std::vector<int>{1, 1, 1, 1, 2, 2, 2, 2});
    }

    SUBCASE("pruning disabled leaves stage 1 contrasting the original") {
        io::ResolvedConfig c2 = cfg;
        c2.disable_np = true;
        TrainHooks hooks;
        hooks.on_views = [&](std::int64_t, int stage, const AttributedGraph& v1,
                             const AttributedGraph& v2) {
            if (stage == 1) {
                CHECK(v1.edge_list() == original);
                CHECK(v2.edge_list() == original);
            }
        };
        train(g, c2, &hooks);
    }

    SUBCASE("completion disabled keeps the stage 1 pair throughout") {
        io::ResolvedConfig c2 = cfg;
        c2.disable_nc = true;
        TrainHooks hooks;
        hooks.on_views = [&](std::int64_t, int, const AttributedGraph& v1,
                             const AttributedGraph& v2) {
            CHECK(v1.edge_list() == original);
            CHECK(v2.edge_count() < g.edge_count());
        };
        train(g, c2, &hooks);
    }

    SUBCASE("completion plus pruned keeps pruning in stage 2") {
        io::ResolvedConfig c2 = cfg;
        c2.stage2_views = io::Stage2Views::CompletionPlusPruned;
        TrainHooks hooks;
        hooks.on_views = [&](std::int64_t, int stage, const AttributedGraph& v1,
                             const AttributedGraph& v2) {
            if (stage == 2) {
                CHECK(v1.edge_count() >= g.edge_count());
                CHECK(v2.edge_count() < g.edge_count());
                for (const Edge& e : v2.edge_list()) CHECK(g.has_edge(e.first, e.second));
            }
        };
        train(g, c2, &hooks);
    }
}

TEST_CASE("epoch log carries losses and stages") {
    const AttributedGraph g = testsupport::make_small_graph(30, 5, 80, 13);
    io::ResolvedConfig cfg = tiny_config();
    const TrainResult r = train(g, cfg);

    REQUIRE(r.log.size() == 8);
    for (std::size_t i = 0; i < r.log.size(); ++i) {
        const EpochRecord& rec = r.log[i];
        CHECK(rec.epoch == static_cast<std::int64_t>(i + 1));
        CHECK(rec.stage == (rec.epoch <= 4 ? 1 : 2));
        CHECK(std::isfinite(rec.total));
        CHECK(rec.intra > 0.0);
        CHECK(rec.inter_feat > 0.0);
        CHECK(rec.wall_ms >= 0.0);
    }
    CHECK(r.params.adam_step == 8);

    io::ResolvedConfig no_inter = cfg;
    no_inter.disable_inter = true;
    const TrainResult r2 = train(g, no_inter);
    for (const EpochRecord& rec : r2.log) {
        CHECK(rec.inter_feat == 0.0);
        CHECK(rec.inter_score == 0.0);
        CHECK(rec.total == rec.intra);
    }

    io::ResolvedConfig no_intra = cfg;
    no_intra.disable_intra = true;
    const TrainResult r3 = train(g, no_intra);
    for (const EpochRecord& rec : r3.log) CHECK(rec.intra == 0.0);
}

TEST_CASE("training is bitwise deterministic in the seed") {
    const AttributedGraph g = testsupport::make_small_graph(30, 5, 80, 15);
    const io::ResolvedConfig cfg = tiny_config();

    const TrainResult a = train(g, cfg);
    const TrainResult b = train(g, cfg);
    CHECK(same_bits(a.params.w_gcn, b.params.w_gcn));
    CHECK(same_bits(a.params.w_bil, b.params.w_bil));
    CHECK(same_bits(a.params.m_gcn, b.params.m_gcn));
    CHECK(same_bits(a.window.data(), b.window.data()));
    REQUIRE(a.log.size() == b.log.size());
    for (std::size_t i = 0; i < a.log.size(); ++i) CHECK(a.log[i].total == b.log[i].total);

    io::ResolvedConfig other = cfg;
    other.seed = 12;
    const TrainResult c = train(g, other);
    CHECK_FALSE(same_bits(a.params.w_gcn, c.params.w_gcn));
}

TEST_CASE("training rejects degenerate graphs") {
    io::ResolvedConfig cfg = tiny_config();
    Matrix x(1, 3);
    x.fill(1.0);
    const AttributedGraph single = build_graph(std::vector<Edge>{}, std::move(x));
    CHECK_THROWS_AS(train(single, cfg), ParamError);
}

TEST_CASE("checkpoints round trip byte for byte") {
    TempDir tmp;
    Rng rng(21);
    ModelParams p = init_params(7, 4, rng);
    // Touch the moments so the round trip covers them too.
    GradientSet g = grads_like(p);
    g.d_w_gcn(0, 0) = 1.25;
    g.d_w_bil(2, 1) = -0.75;
    adam_step(p, g, 0.01);

    const std::string path = tmp.file("model.ckpt");
    save_checkpoint(p, path);
    const ModelParams q = load_checkpoint(path);
    CHECK(q.adam_step == p.adam_step);
    CHECK(same_bits(q.w_gcn, p.w_gcn));
    CHECK(same_bits(q.w_bil, p.w_bil));
    CHECK(same_bits(q.m_gcn, p.m_gcn));
    CHECK(same_bits(q.v_gcn, p.v_gcn));
    CHECK(same_bits(q.m_bil, p.m_bil));
    CHECK(same_bits(q.v_bil, p.v_bil));
}

TEST_CASE("corrupt checkpoints are rejected") {
    TempDir tmp;
    Rng rng(22);
    const ModelParams p = init_params(5, 3, rng);
    const std::string path = tmp.file("model.ckpt");
    save_checkpoint(p, path);

    CHECK_THROWS_AS(load_checkpoint(tmp.file("absent.ckpt")), CheckpointError);

    // Truncation: drop the last 16 bytes.
    {
        std::ifstream in(path, std::ios::binary);
        std::string bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
        std::ofstream out(tmp.file("short.ckpt"), std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 16));
    }
    CHECK_THROWS_AS(load_checkpoint(tmp.file("short.ckpt")), CheckpointError);

    // Wrong magic.
    {
        std::ifstream in(path, std::ios::binary);
        std::string bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
        bytes[0] = 'X';
        std::ofstream out(tmp.file("magic.ckpt"), std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    }
    CHECK_THROWS_AS(load_checkpoint(tmp.file("magic.ckpt")), CheckpointError);

    // Unsupported version (bytes 8..11 hold it).
    {
        std::ifstream in(path, std::ios::binary);
        std::string bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
        bytes[8] = 99;
        std::ofstream out(tmp.file("version.ckpt"), std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    }
    CHECK_THROWS_AS(load_checkpoint(tmp.file("version.ckpt")), CheckpointError);

    // Trailing garbage.
    {
        std::ifstream in(path, std::ios::binary);
        std::string bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
        bytes += "extra";
        std::ofstream out(tmp.file("long.ckpt"), std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    }
    CHECK_THROWS_AS(load_checkpoint(tmp.file("long.ckpt")), CheckpointError);
}

TEST_CASE("exploding training reports a finite-loss failure") {
    // The stable BCE keeps the loss finite at any magnitude short of
    // overflow, so the step size has to push the bilinear products past the
    // double range before the guard can fire.
    const AttributedGraph g = testsupport::make_small_graph(20, 5, 40, 17);
    io::ResolvedConfig cfg = tiny_config();
    cfg.learning_rate = 1e160;
    cfg.epochs = 5;
    cfg.stage_switch_epoch = 3;
    CHECK_THROWS_AS(train(g, cfg), TrainingError);
}
