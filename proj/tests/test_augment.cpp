#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <set>
#include <vector>

#include "adgcl/augment.hpp"
#include "adgcl/error.hpp"
#include "adgcl/graph.hpp"
#include "adgcl/rng.hpp"
#include "doctest.h"
#include "synthetic.hpp"

using namespace adgcl;

namespace {

Matrix ones(std::int64_t n, std::int64_t f) {
    Matrix m(static_cast<std::size_t>(n), static_cast<std::size_t>(f));
    m.fill(1.0);
    return m;
}

// Star: node 0 joined to nodes 1..leaves. Row 0 is e_0; leaf i is
// (cos_i, sqrt(1 - cos_i^2)), so cos(x_0, x_i) = cos_i exactly.
AttributedGraph make_star(const std::vector<double>& leaf_cos) {
    const std::size_t n = leaf_cos.size() + 1;
    Matrix x(n, 2);
    x(0, 0) = 1.0;
    std::vector<Edge> edges;
    for (std::size_t i = 0; i < leaf_cos.size(); ++i) {
        const double c = leaf_cos[i];
        x(i + 1, 0) = c;
        x(i + 1, 1) = std::sqrt(std::max(0.0, 1.0 - c * c));
        edges.emplace_back(0, static_cast<NodeId>(i + 1));
    }
    return build_graph(edges, std::move(x));
}

double total_variation(const std::vector<double>& p, const std::vector<double>& q) {
    double tv = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) tv += std::abs(p[i] - q[i]);
    return 0.5 * tv;
}

ScoreWindow filled_window(std::int64_t n, std::int64_t w, double pos_val, double neg_val) {
    ScoreWindow sw(n, w);
    const std::vector<double> pos(static_cast<std::size_t>(n), pos_val);
    const std::vector<double> neg(static_cast<std::size_t>(n), neg_val);
    sw.push(pos, neg);
    return sw;
}

}  // namespace

TEST_CASE("score window shifts oldest pair out") {
    ScoreWindow sw(2, 3);
    CHECK(sw.n() == 2);
    CHECK(sw.window_len() == 3);
    CHECK(sw.filled_epochs() == 0);

    for (int t = 1; t <= 4; ++t) {
        const std::vector<double> pos{0.1 * t, 0.1 * t + 0.01};
        const std::vector<double> neg{0.2 * t, 0.2 * t + 0.01};
        sw.push(pos, neg);
        CHECK(sw.filled_epochs() == std::min<std::int64_t>(t, 3));
    }

    // After pushes t = 1..4 into w = 3, rows hold pairs from t = 2, 3, 4.
    const auto r0 = sw.row(0);
    REQUIRE(r0.size() == 6);
    CHECK(r0[0] == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(r0[1] == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(r0[2] == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(r0[3] == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(r0[4] == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(r0[5] == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("score window keeps unfilled slots at zero") {
    ScoreWindow sw(1, 4);
    sw.push(std::vector<double>{1.5}, std::vector<double>{0.5});
    const auto r = sw.row(0);
    for (std::size_t i = 0; i < 6; ++i) CHECK(r[i] == 0.0);
    CHECK(r[6] == 1.5);
    CHECK(r[7] == 0.5);
}

TEST_CASE("score window rejects invalid construction and pushes") {
    CHECK_THROWS_AS(ScoreWindow(3, 0), ParamError);
    CHECK_THROWS_AS(ScoreWindow(-1, 2), ParamError);

    ScoreWindow sw(2, 2);
    CHECK_THROWS_AS(sw.push(std::vector<double>{1.0}, std::vector<double>{1.0, 1.0}), ParamError);
    CHECK_THROWS_AS(sw.push(std::vector<double>{1.0, 2.5}, std::vector<double>{1.0, 1.0}),
                    ParamError);
    CHECK_THROWS_AS(sw.push(std::vector<double>{1.0, -0.1}, std::vector<double>{1.0, 1.0}),
                    ParamError);
    const double nan = std::nan("");
    CHECK_THROWS_AS(sw.push(std::vector<double>{1.0, nan}, std::vector<double>{1.0, 1.0}),
                    ParamError);
}

TEST_CASE("score window restore round trip") {
    ScoreWindow sw(3, 2);
    sw.push(std::vector<double>{0.1, 0.2, 0.3}, std::vector<double>{0.4, 0.5, 0.6});

    ScoreWindow copy;
    copy.restore(sw.data(), sw.filled_epochs());
    CHECK(copy.n() == 3);
    CHECK(copy.window_len() == 2);
    CHECK(copy.filled_epochs() == 1);
    for (NodeId v = 0; v < 3; ++v) {
        const auto a = sw.row(v);
        const auto b = copy.row(v);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
    }

    ScoreWindow bad;
    CHECK_THROWS_AS(bad.restore(Matrix(2, 3), 1), ParamError);  // odd columns
    CHECK_THROWS_AS(bad.restore(Matrix(2, 4), 3), ParamError);  // filled > w
    CHECK_THROWS_AS(bad.restore(Matrix(2, 4), -1), ParamError);
}

TEST_CASE("anomaly similarity is the dot over pushed pairs") {
    ScoreWindow sw(2, 3);
    CHECK(anomaly_similarity(sw, 0, 1) == 0.0);  // nothing pushed

    sw.push(std::vector<double>{0.5, 1.0}, std::vector<double>{0.25, 0.5});
    sw.push(std::vector<double>{1.5, 0.5}, std::vector<double>{1.0, 2.0});
    const double expect = 0.5 * 1.0 + 0.25 * 0.5 + 1.5 * 0.5 + 1.0 * 2.0;
    CHECK(anomaly_similarity(sw, 0, 1) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(anomaly_similarity(sw, 0, 1) == anomaly_similarity(sw, 1, 0));
    // Self similarity is the squared norm, strictly positive once filled.
    CHECK(anomaly_similarity(sw, 0, 0) > 0.0);
}

TEST_CASE("feature similarity cache matches on-demand bits") {
    const AttributedGraph g = testsupport::make_small_graph(30, 8, 60, 21);
    const Matrix nf = l2_normalize_features(g);

    FeatureSimilarity lazy(nf);
    FeatureSimilarity cached(nf);
    cached.precompute();

    std::vector<double> row_lazy(30), row_cached(30);
    for (NodeId v = 0; v < 30; ++v) {
        lazy.row(v, row_lazy);
        cached.row(v, row_cached);
        for (std::size_t u = 0; u < 30; ++u) {
            CHECK(row_lazy[u] == row_cached[u]);
            CHECK(lazy.pair(static_cast<NodeId>(u), v) == cached.pair(static_cast<NodeId>(u), v));
            CHECK(row_lazy[u] == lazy.pair(static_cast<NodeId>(u), v));
        }
        // Diagonal of a unit-normalized row is its squared norm.
        const double* xv = nf.row(static_cast<std::size_t>(v));
        const double self = std::inner_product(xv, xv + nf.cols(), xv, 0.0);
        CHECK(row_lazy[static_cast<std::size_t>(v)] == doctest::Approx(self).epsilon(1e-12));
    }

    std::vector<double> short_row(29);
    CHECK_THROWS_AS(lazy.row(0, short_row), ParamError);
}

TEST_CASE("prune rejects bad arguments") {
    const AttributedGraph g = make_star({0.5, 0.5, 0.5});
    const Matrix nf = l2_normalize_features(g);
    FeatureSimilarity sim(nf);
    Rng rng(1);
    CHECK_THROWS_AS(prune_head_node(g, 0, 0, sim, rng), ParamError);
    CHECK_THROWS_AS(prune_head_node(g, 0, 3, sim, rng), ParamError);  // degree == k
    CHECK_THROWS_AS(prune_head_node(g, 1, 2, sim, rng), ParamError);  // leaf degree 1
}

TEST_CASE("prune returns exactly k distinct neighbors") {
    const AttributedGraph g = make_star(std::vector<double>(10, 0.8));
    const Matrix nf = l2_normalize_features(g);
    FeatureSimilarity sim(nf);
    for (std::uint64_t s = 0; s < 50; ++s) {
        Rng rng(s);
        const auto kept = prune_head_node(g, 0, 6, sim, rng);
        REQUIRE(kept.size() == 6);
        std::set<NodeId> uniq(kept.begin(), kept.end());
        CHECK(uniq.size() == 6);
        for (NodeId v : kept) {
            CHECK(v >= 1);
            CHECK(v <= 10);
        }
    }
}

TEST_CASE("prune never draws an anti-correlated neighbor") {
    // Leaf 10 has cosine -0.9 with the center, the rest 0.9: its weight
    // clamps to zero while nine positive draws fill k = 9.
    std::vector<double> cos(10, 0.9);
    cos[9] = -0.9;
    const AttributedGraph g = make_star(cos);
    const Matrix nf = l2_normalize_features(g);
    FeatureSimilarity sim(nf);
    for (std::uint64_t s = 0; s < 200; ++s) {
        Rng rng(s);
        const auto kept = prune_head_node(g, 0, 9, sim, rng);
        CHECK(std::find(kept.begin(), kept.end(), 10) == kept.end());
    }
}

TEST_CASE("prune falls back to uniform when no neighbor correlates") {
    // All leaves orthogonal to the center: every weight is zero.
    const AttributedGraph g = make_star(std::vector<double>(8, 0.0));
    const Matrix nf = l2_normalize_features(g);
    FeatureSimilarity sim(nf);
    std::vector<std::int64_t> count(9, 0);
    const int trials = 40000;
    Rng rng(7);
    for (int t = 0; t < trials; ++t) {
        const auto kept = prune_head_node(g, 0, 1, sim, rng);
        REQUIRE(kept.size() == 1);
        ++count[static_cast<std::size_t>(kept[0])];
    }
    for (std::size_t v = 1; v <= 8; ++v)
        CHECK(std::abs(count[v] / static_cast<double>(trials) - 0.125) < 0.01);
}

TEST_CASE("prune draw frequencies follow the similarity weights") {
    // k = 1 makes the marginal exactly proportional to the clamped cosine.
    const std::vector<double> cos{0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40, 0.45, 0.50};
    const AttributedGraph g = make_star(cos);
    const Matrix nf = l2_normalize_features(g);
    FeatureSimilarity sim(nf);

    const double total = std::accumulate(cos.begin(), cos.end(), 0.0);
    std::vector<double> expect(10);
    for (std::size_t i = 0; i < 10; ++i) expect[i] = cos[i] / total;

    const int trials = 100000;
    std::vector<double> freq(10, 0.0);
    Rng rng(99);
    for (int t = 0; t < trials; ++t) {
        const auto kept = prune_head_node(g, 0, 1, sim, rng);
        freq[static_cast<std::size_t>(kept[0] - 1)] += 1.0 / trials;
    }
    CHECK(total_variation(freq, expect) < 0.02);
}

TEST_CASE("pruned view caps the star center at k") {
    const AttributedGraph g = make_star(std::vector<double>(10, 0.7));
    const Matrix nf = l2_normalize_features(g);
    FeatureSimilarity sim(nf);
    const DegreePartition part = partition_by_degree(g, 6);
    REQUIRE(part.head_nodes == std::vector<NodeId>{0});

    const AttributedGraph pruned = build_pruned_view(g, part, sim, 5);
    CHECK(pruned.n == g.n);
    CHECK(pruned.degree(0) == 6);
    // Leaves are tail nodes with no choices of their own.
    for (NodeId v = 1; v <= 10; ++v) CHECK(pruned.degree(v) <= 1);
    for (const Edge& e : pruned.edge_list()) CHECK(g.has_edge(e.first, e.second));
}

TEST_CASE("pruned view invariants on a random graph") {
    const AttributedGraph g = testsupport::make_small_graph(80, 6, 400, 17);
    const Matrix nf = l2_normalize_features(g);
    FeatureSimilarity sim(nf);
    sim.precompute();
    const DegreePartition part = partition_by_degree(g, 6);
    REQUIRE(!part.head_nodes.empty());

    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        const AttributedGraph pruned = build_pruned_view(g, part, sim, seed);
        CHECK(pruned.n == g.n);
        // Every surviving edge existed before.
        for (const Edge& e : pruned.edge_list()) CHECK(g.has_edge(e.first, e.second));
        // A head keeps at least its own k draws; an edge it dropped can
        // still survive through the other endpoint, never beyond the
        // original degree.
        for (NodeId h : part.head_nodes) {
            CHECK(pruned.degree(h) >= part.k_threshold);
            CHECK(pruned.degree(h) <= g.degree(h));
        }
        for (NodeId t : part.tail_nodes) CHECK(pruned.degree(t) <= g.degree(t));
    }

    const AttributedGraph a = build_pruned_view(g, part, sim, 42);
    const AttributedGraph b = build_pruned_view(g, part, sim, 42);
    CHECK(a.edge_list() == b.edge_list());
    const AttributedGraph c = build_pruned_view(g, part, sim, 43);
    CHECK(a.edge_list() != c.edge_list());
}

TEST_CASE("auxiliary draw picks the only informative candidate") {
    // Identical features make every cosine 1; the window gives node 2 the
    // only positive anomaly product with the anchor.
    ScoreWindow sw(4, 2);
    sw.push(std::vector<double>{1.0, 0.0, 0.8, 0.0}, std::vector<double>(4, 0.0));
    const Matrix nf = l2_normalize_rows(ones(4, 3));
    FeatureSimilarity sim(nf);

    for (std::uint64_t s = 0; s < 30; ++s) {
        Rng rng(s);
        const AuxiliaryChoice aux = sample_auxiliary(sw, sim, 0, rng);
        CHECK(aux.node == 2);
        CHECK(aux.phi == doctest::Approx(0.5).epsilon(1e-12));  // w equals w_max
    }
}

TEST_CASE("auxiliary draw is uniform with midpoint mixing when uninformed") {
    // Empty window: every anomaly product is zero.
    ScoreWindow sw(6, 2);
    const Matrix nf = l2_normalize_rows(ones(6, 2));
    FeatureSimilarity sim(nf);

    std::vector<std::int64_t> count(6, 0);
    const int trials = 50000;
    Rng rng(3);
    for (int t = 0; t < trials; ++t) {
        const AuxiliaryChoice aux = sample_auxiliary(sw, sim, 2, rng);
        CHECK(aux.node != 2);
        CHECK(aux.phi == doctest::Approx(0.25).epsilon(1e-12));
        ++count[static_cast<std::size_t>(aux.node)];
    }
    CHECK(count[2] == 0);
    for (std::size_t u = 0; u < 6; ++u) {
        if (u == 2) continue;
        CHECK(std::abs(count[u] / static_cast<double>(trials) - 0.2) < 0.01);
    }
}

TEST_CASE("auxiliary draw frequencies follow the anomaly products") {
    // Anchor 0 scores 1; candidates carry weights w_u in their positive
    // slots, so the product with cosine 1 is w_u itself.
    const std::vector<double> w{0.3, 0.6, 0.9, 1.2, 1.5, 0.15, 0.45, 0.75, 1.05, 1.35};
    const std::int64_t n = 11;
    ScoreWindow sw(n, 1);
    std::vector<double> pos(static_cast<std::size_t>(n), 0.0);
    pos[0] = 1.0;
    for (std::size_t i = 0; i < w.size(); ++i) pos[i + 1] = w[i];
    sw.push(pos, std::vector<double>(static_cast<std::size_t>(n), 0.0));
    const Matrix nf = l2_normalize_rows(ones(n, 2));
    FeatureSimilarity sim(nf);

    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    const double w_max = *std::max_element(w.begin(), w.end());
    std::vector<double> expect(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) expect[i] = w[i] / total;

    const int trials = 100000;
    std::vector<double> freq(w.size(), 0.0);
    Rng rng(11);
    for (int t = 0; t < trials; ++t) {
        const AuxiliaryChoice aux = sample_auxiliary(sw, sim, 0, rng);
        REQUIRE(aux.node >= 1);
        const std::size_t i = static_cast<std::size_t>(aux.node - 1);
        freq[i] += 1.0 / trials;
        CHECK(aux.phi == doctest::Approx(0.5 * w[i] / w_max).epsilon(1e-9));
        CHECK(aux.phi > 0.0);
        CHECK(aux.phi <= 0.5);
    }
    CHECK(total_variation(freq, expect) < 0.02);
}

TEST_CASE("auxiliary draw rejects degenerate inputs") {
    const Matrix nf1 = l2_normalize_rows(ones(1, 2));
    FeatureSimilarity sim1(nf1);
    ScoreWindow sw1(1, 1);
    Rng rng(0);
    CHECK_THROWS_AS(sample_auxiliary(sw1, sim1, 0, rng), ParamError);

    const Matrix nf3 = l2_normalize_rows(ones(3, 2));
    FeatureSimilarity sim3(nf3);
    ScoreWindow sw4(4, 1);
    CHECK_THROWS_AS(sample_auxiliary(sw4, sim3, 0, rng), ParamError);
}

TEST_CASE("empirical degree sampling reproduces graph frequencies") {
    // Path 0-1-2-3 plus edge 1-3: degrees 1, 3, 2, 2.
    const std::vector<Edge> edges{{0, 1}, {1, 2}, {2, 3}, {1, 3}};
    const AttributedGraph g = build_graph(edges, ones(4, 2));
    const EmpiricalDegrees dist(g);

    std::map<std::int64_t, std::int64_t> count;
    const int trials = 100000;
    Rng rng(5);
    for (int t = 0; t < trials; ++t) ++count[dist.sample(rng)];
    CHECK(count.size() == 3);
    CHECK(std::abs(count[1] / static_cast<double>(trials) - 0.25) < 0.01);
    CHECK(std::abs(count[2] / static_cast<double>(trials) - 0.50) < 0.01);
    CHECK(std::abs(count[3] / static_cast<double>(trials) - 0.25) < 0.01);
}

TEST_CASE("completion requires a filled window") {
    const AttributedGraph g = make_star({0.5, 0.5});
    const Matrix nf = l2_normalize_features(g);
    FeatureSimilarity sim(nf);
    ScoreWindow sw(3, 2);
    const EmpiricalDegrees dist(g);
    Rng rng(1);
    CHECK_THROWS_AS(complete_tail_node(g, sw, sim, 1, dist, rng), ParamError);
}

TEST_CASE("completion mixes a valid distribution") {
    const AttributedGraph g = testsupport::make_small_graph(40, 6, 90, 31);
    const Matrix nf = l2_normalize_features(g);
    FeatureSimilarity sim(nf);
    sim.precompute();
    const EmpiricalDegrees dist(g);
    const ScoreWindow sw = filled_window(40, 3, 0.9, 0.4);

    Rng rng(8);
    for (int t = 0; t < 2000; ++t) {
        const NodeId v = static_cast<NodeId>(rng.next_below(40));
        const MixedNeighborhood mix = complete_tail_node(g, sw, sim, v, dist, rng);

        CHECK(mix.anchor == v);
        CHECK(mix.auxiliary != v);
        CHECK(mix.phi > 0.0);
        CHECK(mix.phi <= 0.5);

        REQUIRE(mix.support.size() == mix.probs.size());
        double sum = 0.0;
        for (double p : mix.probs) {
            CHECK(p >= 0.0);
            sum += p;
        }
        CHECK(std::abs(sum - 1.0) < 1e-9);
        CHECK(std::is_sorted(mix.support.begin(), mix.support.end()));
        CHECK(std::find(mix.support.begin(), mix.support.end(), v) == mix.support.end());

        // Draws are distinct members of the support.
        std::set<NodeId> uniq(mix.draws.begin(), mix.draws.end());
        CHECK(uniq.size() == mix.draws.size());
        for (NodeId u : mix.draws)
            CHECK(std::binary_search(mix.support.begin(), mix.support.end(), u));

        // The sampled neighborhood keeps every original neighbor.
        for (NodeId u : g.neighbors(v))
            CHECK(std::binary_search(mix.sampled_neighbors.begin(), mix.sampled_neighbors.end(),
                                     u));
        CHECK(std::is_sorted(mix.sampled_neighbors.begin(), mix.sampled_neighbors.end()));
    }
}

TEST_CASE("completion twin gets the midpoint mixing weight") {
    // Node 1 is the lone candidate with positive cosine and anomaly product,
    // so it is always the auxiliary and its weight is the maximum.
    const std::vector<Edge> edges{{0, 1}, {1, 2}, {1, 3}, {2, 3}};
    Matrix x(4, 2);
    x(0, 0) = 1.0;
    x(1, 0) = 1.0;
    x(2, 1) = 1.0;
    x(3, 1) = 1.0;
    const AttributedGraph g = build_graph(edges, std::move(x));
    const Matrix nf = l2_normalize_features(g);
    FeatureSimilarity sim(nf);
    const EmpiricalDegrees dist(g);
    const ScoreWindow sw = filled_window(4, 2, 1.0, 0.0);

    Rng rng(2);
    const MixedNeighborhood mix = complete_tail_node(g, sw, sim, 0, dist, rng);
    CHECK(mix.auxiliary == 1);
    CHECK(mix.phi == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("completion draw frequencies follow the mixed distribution") {
    // Anchor 0 has the single neighbor 1, which is also the only possible
    // auxiliary; the mixture is then fixed: half the mass on node 1, half
    // spread over node 1's other neighbors by their completion weights.
    const std::size_t extras = 10;
    std::vector<Edge> edges{{0, 1}};
    for (std::size_t i = 0; i < extras; ++i)
        edges.emplace_back(1, static_cast<NodeId>(2 + i));
    const std::int64_t n = static_cast<std::int64_t>(2 + extras);

    // cos(1, u) is controllable per extra node; anchor matches node 1 only.
    Matrix x(static_cast<std::size_t>(n), 3);
    x(0, 0) = 1.0;
    x(1, 0) = 1.0;
    std::vector<double> cos_extra{0.1, 0.2, 0.3, 0.4, 0.5, 0.55, 0.65, 0.75, 0.85, 0.95};
    for (std::size_t i = 0; i < extras; ++i) {
        x(2 + i, 0) = cos_extra[i];
        x(2 + i, 2) = std::sqrt(1.0 - cos_extra[i] * cos_extra[i]);
    }
    const AttributedGraph g = build_graph(edges, std::move(x));
    const Matrix nf = l2_normalize_features(g);
    FeatureSimilarity sim(nf);

    // Window: node 0 and node 1 score 1, extras score 0, so only node 1 has
    // a positive anomaly product with anybody.
    ScoreWindow sw(n, 1);
    std::vector<double> pos(static_cast<std::size_t>(n), 0.0);
    pos[0] = 1.0;
    pos[1] = 1.0;
    sw.push(pos, std::vector<double>(static_cast<std::size_t>(n), 0.0));

    // Reference degrees force m = 1: a graph whose nodes all have degree 1.
    const AttributedGraph ref = build_graph(std::vector<Edge>{{0, 1}}, ones(2, 1));
    const EmpiricalDegrees dist(ref);

    // Zero anomaly products over node 1's extras renormalize that term to
    // uniform; phi is 0.5, so p(1) = 0.5 and each extra gets 0.05.
    std::vector<double> expect(static_cast<std::size_t>(n), 0.0);
    expect[1] = 0.5;
    for (std::size_t i = 0; i < extras; ++i) expect[2 + i] = 0.05;

    const int trials = 100000;
    std::vector<double> freq(static_cast<std::size_t>(n), 0.0);
    Rng rng(13);
    for (int t = 0; t < trials; ++t) {
        const MixedNeighborhood mix = complete_tail_node(g, sw, sim, 0, dist, rng);
        REQUIRE(mix.auxiliary == 1);
        REQUIRE(mix.draws.size() == 1);
        freq[static_cast<std::size_t>(mix.draws[0])] += 1.0 / trials;

        REQUIRE(mix.support.size() == 1 + extras);
        for (std::size_t i = 0; i < mix.support.size(); ++i)
            CHECK(mix.probs[i] ==
                  doctest::Approx(expect[static_cast<std::size_t>(mix.support[i])])
                      .epsilon(1e-12));
    }
    CHECK(total_variation(freq, expect) < 0.02);
}

TEST_CASE("completed view only adds tail edges") {
    const AttributedGraph g = testsupport::make_small_graph(60, 6, 150, 23);
    const Matrix nf = l2_normalize_features(g);
    FeatureSimilarity sim(nf);
    sim.precompute();
    const DegreePartition part = partition_by_degree(g, 4);
    REQUIRE(!part.tail_nodes.empty());
    const ScoreWindow sw = filled_window(60, 3, 0.8, 0.3);

    bool grew = false;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const AttributedGraph comp = build_completed_view(g, sw, part, sim, seed);
        CHECK(comp.n == g.n);
        // Every original edge survives.
        for (const Edge& e : g.edge_list()) CHECK(comp.has_edge(e.first, e.second));
        // New edges touch at least one tail node.
        for (const Edge& e : comp.edge_list()) {
            if (!g.has_edge(e.first, e.second))
                CHECK((!part.head(e.first) || !part.head(e.second)));
        }
        for (NodeId t : part.tail_nodes) {
            CHECK(comp.degree(t) >= g.degree(t));
            if (comp.degree(t) > g.degree(t)) grew = true;
        }
    }
    CHECK(grew);

    const AttributedGraph a = build_completed_view(g, sw, part, sim, 77);
    const AttributedGraph b = build_completed_view(g, sw, part, sim, 77);
    CHECK(a.edge_list() == b.edge_list());
    const AttributedGraph c = build_completed_view(g, sw, part, sim, 78);
    CHECK(a.edge_list() != c.edge_list());
}
