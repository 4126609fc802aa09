// adgcl: anomaly-injection, training, scoring, and evaluation pipeline.
//
// Subcommands map to pipeline stages so injected datasets can be cached and
// reused across seeds. Every subcommand writes a manifest holding its fully
// resolved parameters and seed, which is sufficient to reproduce its outputs
// exactly. Exit codes: 0 success, 2 usage or parameter errors, 3 I/O errors,
// 4 numerical failure during training.

#include <omp.h>

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "adgcl/augment.hpp"
#include "adgcl/data_io.hpp"
#include "adgcl/error.hpp"
#include "adgcl/graph.hpp"
#include "adgcl/inject.hpp"
#include "adgcl/log.hpp"
#include "adgcl/metrics.hpp"
#include "adgcl/model.hpp"
#include "adgcl/objective.hpp"
#include "adgcl/rng.hpp"
#include "adgcl/scorer.hpp"
#include "adgcl/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw adgcl::IoError("cannot create directory " + dir + ": " + ec.message());
}

void write_json_file(const json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw adgcl::IoError("cannot open " + path + " for writing");
    out << j.dump(2) << "\n";
    if (!out) throw adgcl::IoError("write to " + path + " failed");
}

// The loaders validate per-node files against a known node count; scores.csv
// is the one input whose row count *defines* n, so count its data rows first.
std::int64_t count_data_rows(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw adgcl::IoError("cannot open " + path);
    std::int64_t rows = 0;
    std::string line;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            header_seen = true;
            continue;
        }
        ++rows;
    }
    return rows;
}

void check_endpoints(std::span<const adgcl::Edge> edges, std::int64_t n,
                     const std::string& graph_path, const std::string& rows_source) {
    for (const auto& [u, v] : edges)
        if (u >= n || v >= n)
            throw adgcl::IoError(graph_path + " references node " +
                                 std::to_string(std::max(u, v)) + " but " + rows_source +
                                 " provides only " + std::to_string(n) + " rows");
}

// ---------------------------------------------------------------- inject --

struct InjectArgs {
    std::string graph, features, out_dir;
    std::int64_t clique_size = 15;
    std::int64_t clique_count = 5;
    std::int64_t feature_count = -1;  // default: match the structural count
    std::int64_t k_candidates = 50;
    std::uint64_t seed = 1;
};

int cmd_inject(const InjectArgs& a) {
    const auto edges = adgcl::io::load_edge_list(a.graph);
    adgcl::Matrix x = adgcl::io::load_feature_csv(a.features);
    const auto n = static_cast<std::int64_t>(x.rows());
    check_endpoints(edges, n, a.graph, a.features);
    const adgcl::AttributedGraph g = adgcl::build_graph(edges, std::move(x));
    const std::int64_t edges_before = g.edge_count();

    const std::int64_t feature_count =
        a.feature_count >= 0 ? a.feature_count : a.clique_size * a.clique_count;

    adgcl::Rng rng(a.seed);
    adgcl::InjectionResult structural =
        adgcl::inject_structural(g, a.clique_size, a.clique_count, rng);
    adgcl::InjectionResult feature = adgcl::inject_feature(structural.graph, feature_count,
                                                           a.k_candidates, structural.anomalies,
                                                           rng);

    adgcl::io::Labels labels;
    labels.label.assign(static_cast<std::size_t>(n), 0);
    labels.kind.assign(static_cast<std::size_t>(n), adgcl::io::AnomalyKind::None);
    for (adgcl::NodeId v : structural.anomalies) {
        labels.label[static_cast<std::size_t>(v)] = 1;
        labels.kind[static_cast<std::size_t>(v)] = adgcl::io::AnomalyKind::Structural;
    }
    for (adgcl::NodeId v : feature.anomalies) {
        labels.label[static_cast<std::size_t>(v)] = 1;
        labels.kind[static_cast<std::size_t>(v)] = adgcl::io::AnomalyKind::Feature;
    }

    ensure_dir(a.out_dir);
    adgcl::io::write_edge_list(feature.graph, a.out_dir + "/graph.txt");
    adgcl::io::write_feature_csv(feature.graph.features, a.out_dir + "/features.csv");
    adgcl::io::write_labels(labels, a.out_dir + "/labels.csv");

    const std::int64_t total =
        static_cast<std::int64_t>(structural.anomalies.size() + feature.anomalies.size());
    json manifest = {
        {"command", "inject"},
        {"inputs", {{"graph", a.graph}, {"features", a.features}}},
        {"parameters",
         {{"clique_size", a.clique_size},
          {"clique_count", a.clique_count},
          {"feature_count", feature_count},
          {"k_candidates", a.k_candidates},
          {"seed", a.seed}}},
        {"nodes", n},
        {"edges_before", edges_before},
        {"edges_after", feature.graph.edge_count()},
        {"structural_anomalies", structural.anomalies.size()},
        {"feature_anomalies", feature.anomalies.size()},
        {"anomaly_count", total},
        {"anomaly_rate", static_cast<double>(total) / static_cast<double>(n)},
    };
    write_json_file(manifest, a.out_dir + "/manifest.json");
    ADGCL_LOG_INFO("injected %lld anomalies (%.2f%%) into %lld nodes", (long long)total,
                   100.0 * static_cast<double>(total) / static_cast<double>(n), (long long)n);
    return 0;
}

// ----------------------------------------------------------------- train --

struct TrainArgs {
    std::string data, config, out;
};

void write_train_log(const std::vector<adgcl::EpochRecord>& log, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw adgcl::IoError("cannot open " + path + " for writing");
    for (const auto& r : log) {
        json line = {{"epoch", r.epoch},        {"stage", r.stage},
                     {"intra", r.intra},        {"inter", r.inter_feat + r.inter_score},
                     {"total", r.total},        {"wall_ms", r.wall_ms}};
        out << line.dump() << "\n";
    }
    if (!out) throw adgcl::IoError("write to " + path + " failed");
}

int cmd_train(const TrainArgs& a) {
    const adgcl::io::DatasetBundle bundle = adgcl::io::load_dataset(a.data);
    const adgcl::io::RunConfig raw = adgcl::io::load_config(a.config);
    const adgcl::io::ResolvedConfig cfg = adgcl::io::resolve_config(raw, bundle.name);

    ADGCL_LOG_INFO("training on %s: n=%lld edges=%lld epochs=%lld", bundle.name.c_str(),
                   (long long)bundle.graph.n, (long long)bundle.graph.edge_count(),
                   (long long)cfg.epochs);
    const adgcl::TrainResult result = adgcl::train(bundle.graph, cfg);

    ensure_dir(a.out);
    adgcl::save_checkpoint(result.params, a.out + "/checkpoint.bin");
    adgcl::io::write_window(result.window, a.out + "/window.csv");
    write_train_log(result.log, a.out + "/train_log.ndjson");
    json manifest = {
        {"command", "train"},
        {"inputs", {{"data", a.data}, {"config", a.config}}},
        {"dataset", bundle.name},
        {"seed", cfg.seed},
        {"resolved_config", adgcl::io::to_json(cfg)},
    };
    write_json_file(manifest, a.out + "/manifest.json");
    if (!result.log.empty())
        ADGCL_LOG_INFO("final loss %.6f after %zu epochs", result.log.back().total,
                       result.log.size());
    return 0;
}

// ----------------------------------------------------------------- score --

struct ScoreArgs {
    std::string data, checkpoint, out;
    std::int64_t rounds = 256;
    std::uint64_t seed = 1;
};

int cmd_score(const ScoreArgs& a) {
    const adgcl::io::DatasetBundle bundle = adgcl::io::load_dataset(a.data);
    const adgcl::ModelParams params = adgcl::load_checkpoint(a.checkpoint);
    if (params.feature_dim() != bundle.graph.feature_dim)
        throw adgcl::ParamError("checkpoint expects " + std::to_string(params.feature_dim()) +
                                " features but dataset has " +
                                std::to_string(bundle.graph.feature_dim));

    adgcl::ScoreOptions opts;
    opts.rounds = a.rounds;
    const std::vector<double> scores = adgcl::anomaly_scores(bundle.graph, params, opts, a.seed);

    if (const auto parent = fs::path(a.out).parent_path(); !parent.empty())
        ensure_dir(parent.string());
    adgcl::io::write_scores(scores, a.out);
    json manifest = {
        {"command", "score"},
        {"inputs", {{"data", a.data}, {"checkpoint", a.checkpoint}}},
        {"seed", a.seed},
        {"rounds", a.rounds},
        {"restart_prob", opts.restart_prob},
        {"rwr_size", opts.rwr_size},
        {"gcn_layers", opts.gcn_layers},
        {"mask_anchor", opts.mask_anchor},
        {"score_view", "original"},
    };
    write_json_file(manifest, a.out + ".manifest.json");
    return 0;
}

// ------------------------------------------------------------------ eval --

struct EvalArgs {
    std::string scores, labels, graph, out;
    std::int64_t k = 6;
};

int cmd_eval(const EvalArgs& a) {
    const std::int64_t n = count_data_rows(a.scores);
    if (n < 1) throw adgcl::IoError(a.scores + " holds no score rows");
    const std::vector<double> scores = adgcl::io::load_scores(a.scores, n);
    const adgcl::io::Labels labels = adgcl::io::load_labels(a.labels, n);
    const auto edges = adgcl::io::load_edge_list(a.graph);
    check_endpoints(edges, n, a.graph, a.scores);
    const adgcl::AttributedGraph g =
        adgcl::build_graph(edges, adgcl::Matrix(static_cast<std::size_t>(n), 0));

    const adgcl::DegreePartition part = adgcl::partition_by_degree(g, a.k);
    const adgcl::EvalReport report = adgcl::stratified_eval(
        scores, labels.label, g, part, adgcl::io::StratifyMode::Stratum);
    if (!report.auc.has_value())
        ADGCL_LOG_WARN("labels are single-class; overall metrics are undefined");
    if (!report.tail_auc.has_value() || !report.head_auc.has_value())
        ADGCL_LOG_WARN("a degree stratum is single-class; its metrics are undefined");

    ensure_dir(a.out);
    write_json_file(adgcl::report_to_json(report), a.out + "/report.json");
    adgcl::write_degree_csv(report, a.out + "/degree_auc.csv");
    json manifest = {
        {"command", "eval"},
        {"inputs", {{"scores", a.scores}, {"labels", a.labels}, {"graph", a.graph}}},
        {"k_threshold", a.k},
        {"stratify_mode", "stratum"},
    };
    write_json_file(manifest, a.out + "/manifest.json");
    return 0;
}

// ---------------------------------------------------------------- ablate --

struct AblateArgs {
    std::string data, config, out;
};

struct Variant {
    const char* name;
    bool np, nc, intra, inter;  // which component to disable
};

constexpr Variant kVariants[] = {
    {"full", false, false, false, false},
    {"no_np", true, false, false, false},
    {"no_nc", false, true, false, false},
    {"no_intra", false, false, true, false},
    {"no_inter", false, false, false, true},
};

std::string csv_cell(const std::optional<double>& v) {
    if (!v.has_value()) return "";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", *v);
    return buf;
}

int cmd_ablate(const AblateArgs& a) {
    const adgcl::io::DatasetBundle bundle = adgcl::io::load_dataset(a.data);
    if (!bundle.has_labels)
        throw adgcl::ParamError("ablate needs labels.csv in " + a.data +
                                " to evaluate each variant");
    const adgcl::io::RunConfig raw = adgcl::io::load_config(a.config);
    const adgcl::io::ResolvedConfig base = adgcl::io::resolve_config(raw, bundle.name);

    ensure_dir(a.out);
    std::ofstream cmp(a.out + "/comparison.csv");
    if (!cmp) throw adgcl::IoError("cannot open " + a.out + "/comparison.csv for writing");
    cmp << "variant,auc,tail_auc,head_auc,auprc,ap,degree_auc_slope\n";

    for (const Variant& var : kVariants) {
        adgcl::io::ResolvedConfig cfg = base;
        cfg.disable_np = base.disable_np || var.np;
        cfg.disable_nc = base.disable_nc || var.nc;
        cfg.disable_intra = base.disable_intra || var.intra;
        cfg.disable_inter = base.disable_inter || var.inter;

        ADGCL_LOG_INFO("ablate variant %s: training %lld epochs", var.name,
                       (long long)cfg.epochs);
        const adgcl::TrainResult tr = adgcl::train(bundle.graph, cfg);

        adgcl::ScoreOptions sopts;
        sopts.rounds = cfg.r;
        sopts.restart_prob = cfg.restart_prob;
        sopts.rwr_size = cfg.rwr_size;
        sopts.gcn_layers = cfg.gcn_layers;
        sopts.mask_anchor = cfg.mask_anchor;

        const adgcl::DegreePartition part =
            adgcl::partition_by_degree(bundle.graph, cfg.k_threshold);
        std::vector<double> scores;
        if (cfg.score_view == adgcl::io::ScoreView::CompletionAvg) {
            const adgcl::Matrix nf = adgcl::l2_normalize_features(bundle.graph);
            adgcl::FeatureSimilarity sim(nf);
            const std::size_t nn = static_cast<std::size_t>(bundle.graph.n);
            if (nn * nn * sizeof(double) <= adgcl::ObjectiveWorkspace::kMaterializeBytes)
                sim.precompute();
            adgcl::CompletionScoring ctx{&tr.window, &part, &sim};
            scores = adgcl::anomaly_scores(bundle.graph, tr.params, sopts, cfg.seed, &ctx);
        } else {
            scores = adgcl::anomaly_scores(bundle.graph, tr.params, sopts, cfg.seed);
        }

        adgcl::EvalReport report = adgcl::stratified_eval(scores, bundle.labels.label,
                                                          bundle.graph, part, cfg.stratify_mode);
        report.rounds = cfg.r;

        const std::string vdir = a.out + "/" + var.name;
        ensure_dir(vdir);
        adgcl::io::write_scores(scores, vdir + "/scores.csv");
        write_json_file(adgcl::report_to_json(report), vdir + "/report.json");
        adgcl::write_degree_csv(report, vdir + "/degree_auc.csv");

        cmp << var.name << "," << csv_cell(report.auc) << "," << csv_cell(report.tail_auc) << ","
            << csv_cell(report.head_auc) << "," << csv_cell(report.auprc) << ","
            << csv_cell(report.ap) << "," << csv_cell(report.degree_auc_slope) << "\n";
    }
    if (!cmp) throw adgcl::IoError("write to " + a.out + "/comparison.csv failed");
    cmp.close();

    json manifest = {
        {"command", "ablate"},
        {"inputs", {{"data", a.data}, {"config", a.config}}},
        {"dataset", bundle.name},
        {"seed", base.seed},
        {"resolved_config", adgcl::io::to_json(base)},
        {"variants", {"full", "no_np", "no_nc", "no_intra", "no_inter"}},
    };
    write_json_file(manifest, a.out + "/manifest.json");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"graph anomaly detection with structure-imbalance-aware augmentation"};
    app.require_subcommand(1);
    int threads = 0;
    app.add_option("--threads", threads, "cap the number of worker threads");

    InjectArgs inject_args;
    auto* inject = app.add_subcommand("inject", "plant benchmark anomalies into a graph");
    inject->fallthrough();
    inject->add_option("--graph", inject_args.graph, "edge list file")->required();
    inject->add_option("--features", inject_args.features, "feature CSV file")->required();
    inject->add_option("--out-dir", inject_args.out_dir, "output dataset directory")->required();
    inject->add_option("--clique-size", inject_args.clique_size, "nodes per injected clique");
    inject->add_option("--clique-count", inject_args.clique_count, "number of injected cliques");
    inject->add_option("--feature-count", inject_args.feature_count,
                       "feature anomalies (default: clique-size * clique-count)");
    inject->add_option("--k-candidates", inject_args.k_candidates,
                       "candidates per feature-anomaly draw");
    inject->add_option("--seed", inject_args.seed, "random seed");

    TrainArgs train_args;
    auto* train = app.add_subcommand("train", "train the contrastive model");
    train->fallthrough();
    train->add_option("--data", train_args.data, "dataset directory")->required();
    train->add_option("--config", train_args.config, "run configuration JSON")->required();
    train->add_option("--out", train_args.out, "output directory")->required();

    ScoreArgs score_args;
    auto* score = app.add_subcommand("score", "compute per-node anomaly scores");
    score->fallthrough();
    score->add_option("--data", score_args.data, "dataset directory")->required();
    score->add_option("--checkpoint", score_args.checkpoint, "trained checkpoint")->required();
    score->add_option("--rounds", score_args.rounds, "scoring rounds");
    score->add_option("--seed", score_args.seed, "random seed");
    score->add_option("--out", score_args.out, "output score CSV path")->required();

    EvalArgs eval_args;
    auto* eval = app.add_subcommand("eval", "evaluate scores against labels");
    eval->fallthrough();
    eval->add_option("--scores", eval_args.scores, "score CSV")->required();
    eval->add_option("--labels", eval_args.labels, "label CSV")->required();
    eval->add_option("--graph", eval_args.graph, "edge list file")->required();
    eval->add_option("--k", eval_args.k, "degree threshold separating tail from head");
    eval->add_option("--out", eval_args.out, "output directory")->required();

    AblateArgs ablate_args;
    auto* ablate = app.add_subcommand("ablate", "train and evaluate component ablations");
    ablate->fallthrough();
    ablate->add_option("--data", ablate_args.data, "dataset directory")->required();
    ablate->add_option("--config", ablate_args.config, "run configuration JSON")->required();
    ablate->add_option("--out", ablate_args.out, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (threads > 0) omp_set_num_threads(threads);

    try {
        if (inject->parsed()) return cmd_inject(inject_args);
        if (train->parsed()) return cmd_train(train_args);
        if (score->parsed()) return cmd_score(score_args);
        if (eval->parsed()) return cmd_eval(eval_args);
        if (ablate->parsed()) return cmd_ablate(ablate_args);
    } catch (const adgcl::ParamError& e) {
        ADGCL_LOG_ERROR("%s", e.what());
        return 2;
    } catch (const adgcl::ConfigError& e) {
        ADGCL_LOG_ERROR("%s", e.what());
        return 2;
    } catch (const adgcl::IoError& e) {
        ADGCL_LOG_ERROR("%s", e.what());
        return 3;
    } catch (const adgcl::CheckpointError& e) {
        ADGCL_LOG_ERROR("%s", e.what());
        return 3;
    } catch (const adgcl::TrainingError& e) {
        ADGCL_LOG_ERROR("%s", e.what());
        return 4;
    } catch (const std::exception& e) {
        ADGCL_LOG_ERROR("unexpected failure: %s", e.what());
        return 1;
    }
    return 0;
}
