#pragma once

#include <vector>

#include "edlab/tensor.hpp"

namespace edlab {

// Solves A x = b (A square, b rank-1). If plain LU factorization breaks down
// or leaves a poor residual, retries with Tikhonov damping
// A + delta*I, delta = 1e-8 * trace(A)/n. Throws SingularMatrixError when the
// damped system still fails.
Tensor solve_linear(const Tensor& a, const Tensor& b);

// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
// values sorted descending; vectors.row(i) is the unit eigenvector of
// values[i], sign-fixed so the first nonzero entry is positive.
struct SymEigen {
    Tensor values;   // rank-1, length n
    Tensor vectors;  // n x n, rows are eigenvectors
};
SymEigen sym_eigen(const Tensor& a);

// Singular values (descending) via the eigenvalues of the smaller Gram matrix.
std::vector<double> singular_values(const Tensor& m);

// Numerical rank: count of singular values above rel_tol * largest.
int numerical_rank(const Tensor& m, double rel_tol = 1e-8);

}  // namespace edlab
