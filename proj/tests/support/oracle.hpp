#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "adgcl/graph.hpp"
#include "adgcl/model.hpp"
#include "adgcl/objective.hpp"

namespace adgcl::testsupport {

// Quadratic-time Mann-Whitney statistic: counts concordant pairs directly,
// ties at half weight. Independent of the rank-sum production path.
double pairwise_auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

struct PrOracle {
    double auprc = 0.0;
    double ap = 0.0;
};

// Precision-recall areas by brute force: every distinct score is a
// threshold, TP/FP counted by full scans at each one.
PrOracle exhaustive_pr(std::span<const double> scores, std::span<const std::uint8_t> labels);

// Total-variation distance between an empirical frequency table and a
// probability vector over the same categories.
double tv_distance(std::span<const std::int64_t> counts, std::span<const double> probs);

// Which part of the training objective a finite-difference probe targets.
enum class LossPart { Intra, Inter, Total };

struct FdProbe {
    const AttributedGraph* view1 = nullptr;
    const AttributedGraph* view2 = nullptr;
    std::uint64_t struct_seed1 = 0;
    std::uint64_t struct_seed2 = 0;
    ForwardOptions forward;
    LossOptions loss;
};

// Loss value at the given parameters with the probe's fixed randomness.
double probe_loss(const FdProbe& probe, const ModelParams& params, LossPart part);

// Max relative error between analytic gradients and central finite
// differences over every entry of both weight matrices.
double fd_max_rel_error(const FdProbe& probe, const ModelParams& params, LossPart part,
                        double h);

}  // namespace adgcl::testsupport
