#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "adgcl/augment.hpp"
#include "adgcl/graph.hpp"
#include "adgcl/matrix.hpp"

namespace adgcl::io {

// --- flat file formats ------------------------------------------------
// Edges: whitespace-separated id pairs, one per line; blank lines and lines
// starting with '#' are ignored. Features: headerless CSV of doubles, one
// row per node. Labels: CSV with header node_id,label,kind. Scores: CSV
// with header node_id,score. All floats are written with 17 significant
// digits so a write/read round trip is exact.

std::vector<Edge> load_edge_list(const std::string& path);
void write_edge_list(const AttributedGraph& g, const std::string& path);

Matrix load_feature_csv(const std::string& path);
void write_feature_csv(const Matrix& x, const std::string& path);

enum class AnomalyKind : std::uint8_t { None, Structural, Feature };

struct Labels {
    std::vector<std::uint8_t> label;
    std::vector<AnomalyKind> kind;
};

// Requires one row per node id in [0, n); order in the file is free.
Labels load_labels(const std::string& path, std::int64_t n);
void write_labels(const Labels& labels, const std::string& path);

std::vector<double> load_scores(const std::string& path, std::int64_t n);
void write_scores(std::span<const double> scores, const std::string& path);

// Window snapshot: '# filled_epochs=<k>' comment, then a header row and one
// row per node with pairs ordered oldest to newest.
ScoreWindow load_window(const std::string& path);
void write_window(const ScoreWindow& sw, const std::string& path);

// --- dataset bundles ---------------------------------------------------
// A dataset directory holds graph.txt, features.csv, and optionally
// labels.csv. The bundle name (lowercased directory basename) selects
// per-dataset defaults at config resolution.

struct DatasetBundle {
    std::string name;
    AttributedGraph graph;
    bool has_labels = false;
    Labels labels;
};

DatasetBundle load_dataset(const std::string& dir);
void save_dataset(const DatasetBundle& b, const std::string& dir);

// --- run configuration ---------------------------------------------------

enum class Stage2Views { CompletionPair, CompletionPlusPruned };
enum class ScoreView { Original, CompletionAvg };
enum class StratifyMode { Stratum, Global };

// Raw knobs as read from JSON. Optional fields resolve against the dataset
// name; everything else carries its default already.
struct RunConfig {
    std::int64_t d = 64;
    std::int64_t r = 256;
    std::int64_t w = 5;
    double tau = 0.07;
    double alpha = 0.2;
    std::optional<std::int64_t> k_threshold;
    std::optional<double> learning_rate;
    std::optional<std::int64_t> epochs;
    std::optional<std::int64_t> stage_switch_epoch;
    double restart_prob = 0.5;
    std::int64_t rwr_size = 4;
    std::uint64_t seed = 1;
    bool disable_np = false;
    bool disable_nc = false;
    bool disable_intra = false;
    bool disable_inter = false;
    std::int64_t gcn_layers = 1;
    bool mask_anchor = true;
    bool normalize_infonce_rows = true;
    std::string score_contrast_mode = "pos_neg";  // pos_neg | pos_only
    std::string stage2_views = "completion_pair";  // completion_pair | completion_plus_pruned
    std::string score_view = "original";           // original | completion_avg
    std::string stratify_mode = "stratum";         // stratum | global
};

// Fully concrete settings for one run.
struct ResolvedConfig {
    std::string dataset;
    std::int64_t d = 64;
    std::int64_t r = 256;
    std::int64_t w = 5;
    double tau = 0.07;
    double alpha = 0.2;
    std::int64_t k_threshold = 6;
    double learning_rate = 1e-3;
    std::int64_t epochs = 100;
    std::int64_t stage_switch_epoch = 50;
    double restart_prob = 0.5;
    std::int64_t rwr_size = 4;
    std::uint64_t seed = 1;
    bool disable_np = false;
    bool disable_nc = false;
    bool disable_intra = false;
    bool disable_inter = false;
    std::int64_t gcn_layers = 1;
    bool mask_anchor = true;
    bool normalize_infonce_rows = true;
    Stage2Views stage2_views = Stage2Views::CompletionPair;
    ScoreView score_view = ScoreView::Original;
    StratifyMode stratify_mode = StratifyMode::Stratum;
    bool score_pos_only = false;
};

// Parses and validates one JSON object. Unknown keys and out-of-domain
// values are config errors; a missing file is an IO error.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::string& path);

// Fills unset fields from the per-dataset defaults table (learning rate,
// epochs, degree threshold) and checks cross-field constraints.
ResolvedConfig resolve_config(const RunConfig& c, const std::string& dataset_name);

nlohmann::json to_json(const ResolvedConfig& c);

}  // namespace adgcl::io
