#pragma once

#include <cstddef>

namespace edlab::kern {

// Dense f64 kernels behind the tensor ops. The default entry points are
// OpenMP-parallel; kern::serial holds the plain reference loops used by the
// tests and the benchmark. Both accumulate each output element over k in
// ascending order, so results are bit-identical between the two backends and
// independent of the thread count.

// c[m x n] = a[m x k] * b[k x n]
void matmul(const double* a, const double* b, double* c,
            std::size_t m, std::size_t k, std::size_t n);

// c[m x n] = a[m x k] * b[n x k]^T
void matmul_nt(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n);

// c[m x n] = a[k x m]^T * b[k x n]
void matmul_tn(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n);

// tanh-approximation GELU and its derivative
void gelu(const double* x, double* y, std::size_t n);
void gelu_grad(const double* x, const double* gy, double* gx, std::size_t n);  // gx += gy*gelu'(x)

// c[d x d] += sum_i rows_i rows_i^T for rows[n_rows x d]
void accumulate_outer(double* c, const double* rows, std::size_t n_rows, std::size_t d);

namespace serial {

void matmul(const double* a, const double* b, double* c,
            std::size_t m, std::size_t k, std::size_t n);
void matmul_nt(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n);
void matmul_tn(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n);
void gelu(const double* x, double* y, std::size_t n);
void gelu_grad(const double* x, const double* gy, double* gx, std::size_t n);
void accumulate_outer(double* c, const double* rows, std::size_t n_rows, std::size_t d);

}  // namespace serial

}  // namespace edlab::kern
