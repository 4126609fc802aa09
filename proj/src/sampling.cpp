#include "adgcl/sampling.hpp"

#include <algorithm>

#include "adgcl/error.hpp"

namespace adgcl {

std::size_t sample_weighted(std::span<const double> weights, double total, Rng& rng) {
    if (weights.empty()) throw ParamError("sample_weighted: empty weight vector");
    if (!(total > 0.0)) throw ParamError("sample_weighted: total weight must be positive");
    const double u = rng.next_double() * total;
    double acc = 0.0;
    std::size_t last_positive = weights.size();
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (weights[i] <= 0.0) continue;
        acc += weights[i];
        last_positive = i;
        if (u < acc) return i;
    }
    // Rounding can leave u barely above the accumulated sum; the final
    // positive-weight index absorbs it.
    if (last_positive == weights.size())
        throw ParamError("sample_weighted: no positive weight");
    return last_positive;
}

void sample_weighted_wor(std::span<const double> weights, std::size_t k, Rng& rng,
                         std::vector<std::size_t>& out) {
    if (k > weights.size()) throw ParamError("sample_weighted_wor: k exceeds population");
    std::vector<double> w(weights.begin(), weights.end());
    std::vector<std::size_t> remaining;
    for (std::size_t draw = 0; draw < k; ++draw) {
        double total = 0.0;
        for (double x : w)
            if (x > 0.0) total += x;
        std::size_t pick;
        if (total > 0.0) {
            pick = sample_weighted(w, total, rng);
        } else {
            remaining.clear();
            for (std::size_t i = 0; i < w.size(); ++i)
                if (w[i] >= 0.0) remaining.push_back(i);
            pick = remaining[rng.next_below(remaining.size())];
        }
        out.push_back(pick);
        w[pick] = -1.0;  // mark drawn; negatives are skipped everywhere above
    }
}

std::vector<NodeId> rwr_sample(const AttributedGraph& g, NodeId anchor, double restart_prob,
                               std::int64_t target_size, Rng& rng) {
    if (anchor < 0 || anchor >= g.n) throw ParamError("rwr_sample: anchor out of range");
    if (!(restart_prob >= 0.0) || !(restart_prob < 1.0))
        throw ParamError("rwr_sample: restart probability must be in [0, 1)");
    if (target_size < 1) throw ParamError("rwr_sample: target size must be >= 1");
    if (g.degree(anchor) == 0) return {anchor};

    std::vector<NodeId> collected;
    collected.reserve(static_cast<std::size_t>(target_size));
    NodeId cur = anchor;
    const std::int64_t budget = 128 * target_size;
    for (std::int64_t step = 0; step < budget; ++step) {
        if (static_cast<std::int64_t>(collected.size()) >= target_size) break;
        if (rng.next_double() < restart_prob) {
            cur = anchor;
            continue;
        }
        const auto nb = g.neighbors(cur);
        if (nb.empty()) {
            cur = anchor;  // unreachable for connected walks; defensive
            continue;
        }
        cur = nb[rng.next_below(nb.size())];
        if (cur != anchor &&
            std::find(collected.begin(), collected.end(), cur) == collected.end())
            collected.push_back(cur);
    }
    if (collected.empty()) collected.push_back(g.neighbors(anchor)[0]);
    return collected;
}

}  // namespace adgcl
