#pragma once

#include <array>

#include "edlab/tensor.hpp"

namespace edlab {

// Two-component PCA of row observations via eigendecomposition of the
// covariance of centered rows. Components carry the sym_eigen sign
// convention. Degenerate input (all rows equal) yields zero projections,
// zero variance, and the flag set.
struct Pca2d {
    Tensor projections;                           // n_rows x 2
    std::array<double, 2> explained_variance{};   // descending
    Tensor components;                            // 2 x dim, orthonormal rows
    bool degenerate = false;
};

Pca2d pca_2d(const Tensor& rows);

}  // namespace edlab
