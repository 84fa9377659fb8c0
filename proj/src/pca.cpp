#include "edlab/pca.hpp"

#include <cmath>

#include "edlab/errors.hpp"
#include "edlab/kernels.hpp"
#include "edlab/linalg.hpp"

namespace edlab {

Pca2d pca_2d(const Tensor& rows) {
    if (rows.rank() != 2) throw DimensionError("pca_2d: rank-2 input required");
    const std::size_t n = rows.dim(0), d = rows.dim(1);
    if (n < 3) throw ContractError("pca_2d: at least 3 rows required");
    if (d < 2) throw ContractError("pca_2d: row dimension must be >= 2");

    Tensor centered = rows;
    for (std::size_t j = 0; j < d; ++j) {
        double mu = 0.0;
        for (std::size_t i = 0; i < n; ++i) mu += rows.at(i, j);
        mu /= static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) centered.at(i, j) -= mu;
    }

    Pca2d out;
    out.projections = Tensor::zeros({n, 2});
    out.components = Tensor::zeros({2, d});

    double spread = 0.0;
    for (std::size_t i = 0; i < n * d; ++i) spread = std::max(spread, std::fabs(centered[i]));
    if (spread == 0.0) {
        out.degenerate = true;
        return out;
    }

    Tensor cov = Tensor::zeros({d, d});
    kern::accumulate_outer(cov.data(), centered.data(), n, d);
    const double inv = 1.0 / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < d * d; ++i) cov[i] *= inv;

    const SymEigen eig = sym_eigen(cov);
    for (int c = 0; c < 2; ++c) {
        out.explained_variance[c] = std::max(0.0, eig.values[c]);
        for (std::size_t j = 0; j < d; ++j) out.components.at(c, j) = eig.vectors.at(c, j);
    }
    kern::matmul_nt(centered.data(), out.components.data(), out.projections.data(), n, d, 2);
    return out;
}

}  // namespace edlab
