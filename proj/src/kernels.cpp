#include "adgcl/kernels.hpp"

#include <cstring>

#include "adgcl/error.hpp"

namespace adgcl::kernels {

namespace {

void check_gemm_shapes(const Matrix& a, const Matrix& b, const Matrix& c, std::size_t n,
                       std::size_t k, std::size_t k2, std::size_t m) {
    if (k != k2) throw ParamError("gemm: inner dimensions disagree");
    if (c.rows() != n || c.cols() != m) throw ParamError("gemm: output shape mismatch");
    (void)a;
    (void)b;
}

}  // namespace

double dot(const double* a, const double* b, std::size_t n) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    double tail = 0.0;
    for (; i < n; ++i) tail += a[i] * b[i];
    return ((s0 + s1) + (s2 + s3)) + tail;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

// Row-parallel: each output row is produced by exactly one thread with a
// serial k-loop, so the result is independent of the thread count.
void gemm_nn(const Matrix& a, const Matrix& b, Matrix& c) {
    const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
    check_gemm_shapes(a, b, c, n, k, b.rows(), m);
#pragma omp parallel for schedule(static)
    for (std::int64_t ii = 0; ii < static_cast<std::int64_t>(n); ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        double* ci = c.row(i);
        std::memset(ci, 0, m * sizeof(double));
        const double* ai = a.row(i);
        for (std::size_t l = 0; l < k; ++l) {
            const double av = ai[l];
            if (av == 0.0) continue;
            axpy(av, b.row(l), ci, m);
        }
    }
}

void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c) {
    const std::size_t n = a.rows(), k = a.cols(), m = b.rows();
    check_gemm_shapes(a, b, c, n, k, b.cols(), m);
#pragma omp parallel for schedule(static)
    for (std::int64_t ii = 0; ii < static_cast<std::int64_t>(n); ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        const double* ai = a.row(i);
        double* ci = c.row(i);
        for (std::size_t j = 0; j < m; ++j) ci[j] = dot(ai, b.row(j), k);
    }
}

void transpose(const Matrix& a, Matrix& at) {
    const std::size_t n = a.rows(), m = a.cols();
    if (at.rows() != m || at.cols() != n) throw ParamError("transpose: output shape mismatch");
    constexpr std::size_t kBlock = 32;
#pragma omp parallel for schedule(static)
    for (std::int64_t bi = 0; bi < static_cast<std::int64_t>((n + kBlock - 1) / kBlock); ++bi) {
        const std::size_t i0 = static_cast<std::size_t>(bi) * kBlock;
        const std::size_t i1 = i0 + kBlock < n ? i0 + kBlock : n;
        for (std::size_t j0 = 0; j0 < m; j0 += kBlock) {
            const std::size_t j1 = j0 + kBlock < m ? j0 + kBlock : m;
            for (std::size_t i = i0; i < i1; ++i)
                for (std::size_t j = j0; j < j1; ++j) at(j, i) = a(i, j);
        }
    }
}

void spmm(const SparseView& s, const Matrix& x, Matrix& y) {
    if (y.rows() != s.rows || y.cols() != x.cols()) throw ParamError("spmm: output shape mismatch");
    const std::size_t d = x.cols();
#pragma omp parallel for schedule(static)
    for (std::int64_t ii = 0; ii < static_cast<std::int64_t>(s.rows); ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        double* yi = y.row(i);
        std::memset(yi, 0, d * sizeof(double));
        for (std::int64_t e = s.offsets[i]; e < s.offsets[i + 1]; ++e)
            axpy(s.weights[e], x.row(static_cast<std::size_t>(s.cols[e])), yi, d);
    }
}

void relu(const Matrix& in, Matrix& out) {
    if (!in.same_shape(out)) throw ParamError("relu: output shape mismatch");
    const double* src = in.data();
    double* dst = out.data();
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(in.size()); ++i)
        dst[i] = src[i] > 0.0 ? src[i] : 0.0;
}

void relu_backward(const Matrix& pre, const Matrix& dh, Matrix& dpre) {
    if (!pre.same_shape(dh) || !pre.same_shape(dpre))
        throw ParamError("relu_backward: shape mismatch");
    const double* p = pre.data();
    const double* g = dh.data();
    double* out = dpre.data();
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(pre.size()); ++i)
        out[i] = p[i] > 0.0 ? g[i] : 0.0;
}

namespace reference {

double dot(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

void gemm_nn(const Matrix& a, const Matrix& b, Matrix& c) {
    const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
    check_gemm_shapes(a, b, c, n, k, b.rows(), m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            double s = 0.0;
            for (std::size_t l = 0; l < k; ++l) s += a(i, l) * b(l, j);
            c(i, j) = s;
        }
}

void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c) {
    const std::size_t n = a.rows(), k = a.cols(), m = b.rows();
    check_gemm_shapes(a, b, c, n, k, b.cols(), m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            double s = 0.0;
            for (std::size_t l = 0; l < k; ++l) s += a(i, l) * b(j, l);
            c(i, j) = s;
        }
}

void transpose(const Matrix& a, Matrix& at) {
    if (at.rows() != a.cols() || at.cols() != a.rows())
        throw ParamError("transpose: output shape mismatch");
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) at(j, i) = a(i, j);
}

void spmm(const SparseView& s, const Matrix& x, Matrix& y) {
    if (y.rows() != s.rows || y.cols() != x.cols()) throw ParamError("spmm: output shape mismatch");
    y.fill(0.0);
    for (std::size_t i = 0; i < s.rows; ++i)
        for (std::int64_t e = s.offsets[i]; e < s.offsets[i + 1]; ++e)
            for (std::size_t j = 0; j < x.cols(); ++j)
                y(i, j) += s.weights[e] * x(static_cast<std::size_t>(s.cols[e]), j);
}

}  // namespace reference

}  // namespace adgcl::kernels
