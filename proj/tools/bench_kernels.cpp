// Benchmark of the parallel compute kernels against their serial reference
// implementations. Each kernel runs both ways on the same inputs; the table
// reports best-of-N wall times, speedup, and the largest relative element
// difference (dot-product kernels reassociate, so tiny differences are
// expected; structural kernels must match exactly).

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "adgcl/graph.hpp"
#include "adgcl/kernels.hpp"
#include "adgcl/matrix.hpp"
#include "adgcl/rng.hpp"

using adgcl::Matrix;
using adgcl::Rng;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = 2.0 * rng.next_double() - 1.0;
    return m;
}

double best_ms(const std::function<void()>& fn, int reps) {
    fn();  // warm up caches and the thread pool
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        fn();
        const auto t1 = std::chrono::steady_clock::now();
        best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    return best;
}

double max_rel_diff(const Matrix& a, const Matrix& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double denom = std::max({std::fabs(a.data()[i]), std::fabs(b.data()[i]), 1.0});
        worst = std::max(worst, std::fabs(a.data()[i] - b.data()[i]) / denom);
    }
    return worst;
}

void report(const char* name, double par_ms, double ref_ms, double diff) {
    std::printf("%-12s %10.3f ms %10.3f ms %8.2fx %12.3e\n", name, par_ms, ref_ms,
                ref_ms / par_ms, diff);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"compare parallel kernels with their serial references"};
    std::size_t n = 1024;
    std::size_t k = 256;
    int reps = 3;
    int threads = 0;
    std::uint64_t seed = 7;
    app.add_option("--n", n, "matrix dimension");
    app.add_option("--k", k, "inner dimension");
    app.add_option("--reps", reps, "timed repetitions per kernel");
    app.add_option("--threads", threads, "cap the number of worker threads");
    app.add_option("--seed", seed, "random seed");
    CLI11_PARSE(app, argc, argv);
    if (threads > 0) omp_set_num_threads(threads);

    Rng rng(seed);
    const Matrix a = random_matrix(n, k, rng);
    const Matrix b = random_matrix(k, n, rng);
    const Matrix c = random_matrix(n, k, rng);

    // Sparse operand: a random graph of average degree about 8.
    std::vector<adgcl::Edge> edges;
    for (std::size_t i = 0; i < 4 * n; ++i) {
        const auto u = static_cast<adgcl::NodeId>(rng.next_below(n));
        const auto v = static_cast<adgcl::NodeId>(rng.next_below(n));
        if (u != v) edges.emplace_back(u, v);
    }
    const adgcl::AttributedGraph g = adgcl::build_graph(edges, Matrix(n, 1));
    const adgcl::NormalizedAdjacency adj = adgcl::normalized_adjacency(g);

    std::printf("n=%zu k=%zu threads=%d reps=%d\n", n, k, omp_get_max_threads(), reps);
    std::printf("%-12s %13s %13s %9s %12s\n", "kernel", "parallel", "reference", "speedup",
                "max rel diff");

    {
        Matrix out_par(n, n), out_ref(n, n);
        const double tp = best_ms([&] { adgcl::kernels::gemm_nn(a, b, out_par); }, reps);
        const double tr = best_ms([&] { adgcl::kernels::reference::gemm_nn(a, b, out_ref); }, reps);
        report("gemm_nn", tp, tr, max_rel_diff(out_par, out_ref));
    }
    {
        Matrix out_par(n, n), out_ref(n, n);
        const double tp = best_ms([&] { adgcl::kernels::gemm_nt(a, c, out_par); }, reps);
        const double tr = best_ms([&] { adgcl::kernels::reference::gemm_nt(a, c, out_ref); }, reps);
        report("gemm_nt", tp, tr, max_rel_diff(out_par, out_ref));
    }
    {
        Matrix out_par(k, n), out_ref(k, n);
        const double tp = best_ms([&] { adgcl::kernels::transpose(a, out_par); }, reps);
        const double tr = best_ms([&] { adgcl::kernels::reference::transpose(a, out_ref); }, reps);
        report("transpose", tp, tr, max_rel_diff(out_par, out_ref));
    }
    {
        Matrix out_par(n, k), out_ref(n, k);
        const double tp = best_ms([&] { adgcl::kernels::spmm(adj.view(), a, out_par); }, reps);
        const double tr =
            best_ms([&] { adgcl::kernels::reference::spmm(adj.view(), a, out_ref); }, reps);
        report("spmm", tp, tr, max_rel_diff(out_par, out_ref));
    }
    {
        // dot has no parallel path of its own; time the chained-accumulator
        // form against the naive loop over one long vector.
        const std::size_t len = n * k;
        double sp = 0.0, sr = 0.0;
        const double tp =
            best_ms([&] { sp = adgcl::kernels::dot(a.data(), c.data(), len); }, reps);
        const double tr =
            best_ms([&] { sr = adgcl::kernels::reference::dot(a.data(), c.data(), len); }, reps);
        const double denom = std::max({std::fabs(sp), std::fabs(sr), 1.0});
        report("dot", tp, tr, std::fabs(sp - sr) / denom);
    }
    return 0;
}
