#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "adgcl/data_io.hpp"
#include "adgcl/graph.hpp"

namespace adgcl {

// Rank-based AUROC with midrank tie handling. Throws MetricError when either
// class is empty.
double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

struct PrSummary {
    double auprc = 0.0;  // trapezoid over the PR curve, first precision
                         // extended to recall 0
    double ap = 0.0;     // step-sum average precision
};

PrSummary pr_metrics(std::span<const double> scores, std::span<const std::uint8_t> labels);

struct DegreePoint {
    std::int64_t degree = 0;
    double auc = 0.0;
    std::int64_t count = 0;
};

struct EvalReport {
    std::optional<double> auc, auprc, ap;
    std::optional<double> tail_auc, tail_auprc, tail_ap;
    std::optional<double> head_auc, head_auprc, head_ap;
    std::int64_t tail_count = 0, head_count = 0;
    std::int64_t tail_anomalies = 0, head_anomalies = 0;
    std::vector<DegreePoint> degree_curve;
    std::optional<double> degree_auc_slope;  // OLS over the degree curve
    std::optional<std::int64_t> rounds;      // filled by callers that know it
};

// Degree-stratified evaluation. Stratum mode ranks each stratum's nodes
// among themselves; global mode ranks each stratum's anomalies against all
// normal nodes. Strata or degree groups with one class yield null fields /
// no curve point instead of errors.
EvalReport stratified_eval(std::span<const double> scores, std::span<const std::uint8_t> labels,
                           const AttributedGraph& g, const DegreePartition& part,
                           io::StratifyMode mode);

nlohmann::json report_to_json(const EvalReport& r);
void write_degree_csv(const EvalReport& r, const std::string& path);

}  // namespace adgcl
