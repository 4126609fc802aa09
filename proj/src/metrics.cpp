#include "adgcl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "adgcl/error.hpp"

namespace adgcl {

double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    if (scores.size() != labels.size()) throw ParamError("roc_auc: length mismatch");
    const std::size_t n = scores.size();
    std::size_t n_pos = 0;
    for (std::uint8_t l : labels) n_pos += l != 0;
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0)
        throw MetricError("roc_auc: needs both classes present");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Midranks: tied scores share the average of their rank range.
    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double midrank = 0.5 * static_cast<double>(i + 1 + j + 1);
        for (std::size_t k = i; k <= j; ++k)
            if (labels[order[k]] != 0) rank_sum_pos += midrank;
        i = j + 1;
    }
    const double u = rank_sum_pos - 0.5 * static_cast<double>(n_pos) *
                                        static_cast<double>(n_pos + 1);
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

PrSummary pr_metrics(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    if (scores.size() != labels.size()) throw ParamError("pr_metrics: length mismatch");
    const std::size_t n = scores.size();
    std::size_t n_pos = 0;
    for (std::uint8_t l : labels) n_pos += l != 0;
    if (n_pos == 0 || n_pos == n)
        throw MetricError("pr_metrics: needs both classes present");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    PrSummary out;
    double tp = 0.0, fp = 0.0;
    double prev_recall = 0.0, prev_precision = 1.0;
    bool first_group = true;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        for (std::size_t k = i; k <= j; ++k) {
            if (labels[order[k]] != 0)
                tp += 1.0;
            else
                fp += 1.0;
        }
        const double recall = tp / static_cast<double>(n_pos);
        const double precision = tp / (tp + fp);
        if (first_group) {
            // The curve starts at recall 0 with the first threshold's
            // precision, which makes an all-tied ranking integrate to the
            // anomaly rate.
            prev_precision = precision;
            first_group = false;
        }
        out.ap += (recall - prev_recall) * precision;
        out.auprc += (recall - prev_recall) * 0.5 * (precision + prev_precision);
        prev_recall = recall;
        prev_precision = precision;
        i = j + 1;
    }
    return out;
}

namespace {

template <typename Fn>
std::optional<double> try_metric(Fn&& fn) {
    try {
        return fn();
    } catch (const MetricError&) {
        return std::nullopt;
    }
}

struct Subset {
    std::vector<double> scores;
    std::vector<std::uint8_t> labels;
};

}  // namespace

EvalReport stratified_eval(std::span<const double> scores, std::span<const std::uint8_t> labels,
                           const AttributedGraph& g, const DegreePartition& part,
                           io::StratifyMode mode) {
    const std::size_t n = scores.size();
    if (labels.size() != n || static_cast<std::size_t>(g.n) != n)
        throw ParamError("stratified_eval: length mismatch");

    EvalReport r;
    r.auc = try_metric([&] { return roc_auc(scores, labels); });
    const auto pr = try_metric([&] { return pr_metrics(scores, labels).auprc; });
    r.auprc = pr;
    r.ap = try_metric([&] { return pr_metrics(scores, labels).ap; });

    Subset tail, head;
    for (std::size_t i = 0; i < n; ++i) {
        Subset& s = part.head(static_cast<NodeId>(i)) ? head : tail;
        s.scores.push_back(scores[i]);
        s.labels.push_back(labels[i]);
        if (part.head(static_cast<NodeId>(i))) {
            ++r.head_count;
            r.head_anomalies += labels[i] != 0;
        } else {
            ++r.tail_count;
            r.tail_anomalies += labels[i] != 0;
        }
    }

    if (mode == io::StratifyMode::Global) {
        // Each stratum's anomalies against every normal node.
        Subset tail_g, head_g;
        for (std::size_t i = 0; i < n; ++i) {
            const bool is_head = part.head(static_cast<NodeId>(i));
            if (labels[i] != 0) {
                (is_head ? head_g : tail_g).scores.push_back(scores[i]);
                (is_head ? head_g : tail_g).labels.push_back(1);
            } else {
                tail_g.scores.push_back(scores[i]);
                tail_g.labels.push_back(0);
                head_g.scores.push_back(scores[i]);
                head_g.labels.push_back(0);
            }
        }
        tail = std::move(tail_g);
        head = std::move(head_g);
    }

    r.tail_auc = try_metric([&] { return roc_auc(tail.scores, tail.labels); });
    r.tail_auprc = try_metric([&] { return pr_metrics(tail.scores, tail.labels).auprc; });
    r.tail_ap = try_metric([&] { return pr_metrics(tail.scores, tail.labels).ap; });
    r.head_auc = try_metric([&] { return roc_auc(head.scores, head.labels); });
    r.head_auprc = try_metric([&] { return pr_metrics(head.scores, head.labels).auprc; });
    r.head_ap = try_metric([&] { return pr_metrics(head.scores, head.labels).ap; });

    // Per-degree ranking quality; degrees with a single class present are
    // skipped rather than imputed.
    std::vector<std::int64_t> degrees(n);
    std::int64_t max_deg = 0;
    for (std::size_t i = 0; i < n; ++i) {
        degrees[i] = g.degree(static_cast<NodeId>(i));
        max_deg = std::max(max_deg, degrees[i]);
    }
    for (std::int64_t dv = 0; dv <= max_deg; ++dv) {
        Subset s;
        for (std::size_t i = 0; i < n; ++i) {
            if (degrees[i] != dv) continue;
            s.scores.push_back(scores[i]);
            s.labels.push_back(labels[i]);
        }
        if (s.scores.empty()) continue;
        const auto auc = try_metric([&] { return roc_auc(s.scores, s.labels); });
        if (auc)
            r.degree_curve.push_back(
                {dv, *auc, static_cast<std::int64_t>(s.scores.size())});
    }

    if (r.degree_curve.size() >= 2) {
        double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
        const double m = static_cast<double>(r.degree_curve.size());
        for (const auto& p : r.degree_curve) {
            const double x = static_cast<double>(p.degree);
            sx += x;
            sy += p.auc;
            sxx += x * x;
            sxy += x * p.auc;
        }
        const double denom = m * sxx - sx * sx;
        if (denom != 0.0) r.degree_auc_slope = (m * sxy - sx * sy) / denom;
    }
    return r;
}

namespace {

nlohmann::json opt_json(const std::optional<double>& v) {
    if (!v) return nullptr;
    return *v;
}

}  // namespace

nlohmann::json report_to_json(const EvalReport& r) {
    nlohmann::json j;
    j["auc"] = opt_json(r.auc);
    j["auprc"] = opt_json(r.auprc);
    j["ap"] = opt_json(r.ap);
    j["tail"] = {{"auc", opt_json(r.tail_auc)},
                 {"auprc", opt_json(r.tail_auprc)},
                 {"ap", opt_json(r.tail_ap)},
                 {"count", r.tail_count},
                 {"anomalies", r.tail_anomalies}};
    j["head"] = {{"auc", opt_json(r.head_auc)},
                 {"auprc", opt_json(r.head_auprc)},
                 {"ap", opt_json(r.head_ap)},
                 {"count", r.head_count},
                 {"anomalies", r.head_anomalies}};
    j["degree_auc_slope"] = opt_json(r.degree_auc_slope);
    if (r.rounds)
        j["rounds"] = *r.rounds;
    else
        j["rounds"] = nullptr;
    nlohmann::json curve = nlohmann::json::array();
    for (const auto& p : r.degree_curve)
        curve.push_back({{"degree", p.degree}, {"auc", p.auc}, {"count", p.count}});
    j["degree_curve"] = curve;
    return j;
}

void write_degree_csv(const EvalReport& r, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (f == nullptr) throw IoError("cannot open " + path + " for writing");
    std::fputs("degree,auc,count\n", f);
    for (const auto& p : r.degree_curve)
        std::fprintf(f, "%lld,%.17g,%lld\n", static_cast<long long>(p.degree), p.auc,
                     static_cast<long long>(p.count));
    if (std::fclose(f) != 0) throw IoError("write failure on " + path);
}

}  // namespace adgcl
