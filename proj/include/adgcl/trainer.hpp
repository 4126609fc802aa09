#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "adgcl/augment.hpp"
#include "adgcl/data_io.hpp"
#include "adgcl/graph.hpp"
#include "adgcl/model.hpp"
#include "adgcl/objective.hpp"

namespace adgcl {

struct EpochRecord {
    std::int64_t epoch = 0;  // 1-based
    int stage = 1;
    double intra = 0.0;
    double inter_feat = 0.0;
    double inter_score = 0.0;
    double total = 0.0;
    double wall_ms = 0.0;
};

// Instrumentation points; all optional.
struct TrainHooks {
    std::function<void(std::int64_t epoch, int stage, const AttributedGraph& v1,
                       const AttributedGraph& v2)>
        on_views;
};

struct TrainResult {
    ModelParams params;
    ScoreWindow window;
    std::vector<EpochRecord> log;
};

void adam_step(ModelParams& p, const GradientSet& g, double lr, double beta1 = 0.9,
               double beta2 = 0.999, double eps = 1e-8);

// Two-stage contrastive training. Epochs up to stage_switch_epoch contrast
// the original graph against a pruned view; later epochs contrast
// completion-augmented views (schedule degrades gracefully when components
// are disabled). Throws TrainingError when the loss leaves the finite range.
TrainResult train(const AttributedGraph& g, const io::ResolvedConfig& cfg,
                  const TrainHooks* hooks = nullptr);

// Binary checkpoint: weights plus optimizer moments, byte-exact round trip.
void save_checkpoint(const ModelParams& p, const std::string& path);
ModelParams load_checkpoint(const std::string& path);

}  // namespace adgcl
