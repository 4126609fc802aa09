#pragma once

#include <cstdint>
#include <cstddef>

#include "adgcl/matrix.hpp"

namespace adgcl::kernels {

// Read-only CSR view; rows of a square or rectangular sparse matrix.
struct SparseView {
    std::size_t rows = 0;
    const std::int64_t* offsets = nullptr;  // rows+1 entries
    const std::int32_t* cols = nullptr;
    const double* weights = nullptr;
};

// Fixed-order dot product (4 independent accumulator chains, then tail).
// Every cosine/bilinear reduction in the pipeline funnels through this one
// routine so identical inputs give identical bits on every code path.
double dot(const double* a, const double* b, std::size_t n);

// C = A * B. A is n x k, B is k x m, C resized by caller to n x m.
void gemm_nn(const Matrix& a, const Matrix& b, Matrix& c);

// C = A * B^T. A is n x k, B is m x k, C is n x m. C[i][j] = dot(A_i, B_j).
void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c);

// AT = A^T, cache-blocked.
void transpose(const Matrix& a, Matrix& at);

// Y = S * X for CSR S (rows x rows or rows x X.rows()). Row-parallel,
// in-row accumulation strictly in index order.
void spmm(const SparseView& s, const Matrix& x, Matrix& y);

// out = max(in, 0), elementwise.
void relu(const Matrix& in, Matrix& out);

// dpre = dh where pre > 0, else 0.
void relu_backward(const Matrix& pre, const Matrix& dh, Matrix& dpre);

// y += alpha * x over n entries.
void axpy(double alpha, const double* x, double* y, std::size_t n);

// Plain serial loops, used as ground truth in tests and benchmarks.
namespace reference {
double dot(const double* a, const double* b, std::size_t n);
void gemm_nn(const Matrix& a, const Matrix& b, Matrix& c);
void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c);
void transpose(const Matrix& a, Matrix& at);
void spmm(const SparseView& s, const Matrix& x, Matrix& y);
}  // namespace reference

}  // namespace adgcl::kernels
