#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "adgcl/graph.hpp"
#include "adgcl/rng.hpp"

namespace adgcl {

// One draw from an unnormalized nonnegative weight vector. The caller passes
// the precomputed total, which must be > 0.
std::size_t sample_weighted(std::span<const double> weights, double total, Rng& rng);

// k distinct draws without replacement, re-normalizing after each draw. When
// every remaining weight is zero the draw falls back to uniform over the
// remaining indices. Requires k <= weights.size(). Appends to out in draw
// order.
void sample_weighted_wor(std::span<const double> weights, std::size_t k, Rng& rng,
                         std::vector<std::size_t>& out);

// Random walk with restart from anchor. Collects up to target_size distinct
// nodes other than the anchor; each step restarts with probability
// restart_prob, otherwise moves to a uniform neighbor. The step budget is
// 128 * target_size; if the walk collects nothing inside it (possible only
// for restart_prob ~ 1) the anchor's first neighbor is used. An isolated
// anchor yields {anchor} so the neighbor readout is always defined.
std::vector<NodeId> rwr_sample(const AttributedGraph& g, NodeId anchor, double restart_prob,
                               std::int64_t target_size, Rng& rng);

}  // namespace adgcl
