#pragma once

#include <cstdint>
#include <vector>

#include "adgcl/augment.hpp"
#include "adgcl/graph.hpp"
#include "adgcl/model.hpp"

namespace adgcl {

struct ScoreOptions {
    std::int64_t rounds = 256;
    double restart_prob = 0.5;
    std::int64_t rwr_size = 4;
    std::int64_t gcn_layers = 1;
    bool mask_anchor = true;
};

// Inference context for scoring on completion-augmented views instead of the
// original graph. All pointers must outlive the call.
struct CompletionScoring {
    const ScoreWindow* window = nullptr;
    const DegreePartition* partition = nullptr;
    const FeatureSimilarity* sim = nullptr;
};

// Multi-round anomaly score: mean over rounds of (negative-pair score -
// positive-pair score), each round resampling neighbor sets and negative
// partners. Higher means more anomalous. With a completion context each
// round scores a freshly completed view; otherwise every round runs on g.
std::vector<double> anomaly_scores(const AttributedGraph& g, const ModelParams& params,
                                   const ScoreOptions& opts, std::uint64_t seed,
                                   const CompletionScoring* completion = nullptr);

}  // namespace adgcl
