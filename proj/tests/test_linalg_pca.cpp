#include <cmath>

#include "doctest.h"
#include "edlab/errors.hpp"
#include "edlab/kernels.hpp"
#include "edlab/linalg.hpp"
#include "edlab/pca.hpp"
#include "edlab/rng.hpp"

using namespace edlab;

namespace {

Tensor random_spd(std::size_t n, Rng& rng) {
    Tensor m = Tensor::zeros({n, n});
    for (std::size_t i = 0; i < n * n; ++i) m[i] = rng.normal();
    Tensor spd = Tensor::zeros({n, n});
    kern::matmul_nt(m.data(), m.data(), spd.data(), n, n, n);
    for (std::size_t i = 0; i < n; ++i) spd.at(i, i) += 0.5;
    return spd;
}

}  // namespace

TEST_CASE("solve_linear basics") {
    SUBCASE("identity returns rhs") {
        Tensor b({3}, {4.0, -1.0, 2.5});
        CHECK(solve_linear(Tensor::identity(3), b) == b);
    }
    SUBCASE("diagonal") {
        Tensor a({2, 2}, {2.0, 0.0, 0.0, 4.0});
        Tensor b({2}, {2.0, 8.0});
        const Tensor x = solve_linear(a, b);
        CHECK(x[0] == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(x[1] == doctest::Approx(2.0).epsilon(1e-14));
    }
    SUBCASE("random SPD residual below tolerance") {
        Rng rng(3);
        for (int trial = 0; trial < 5; ++trial) {
            Tensor a = random_spd(8, rng);
            Tensor b = Tensor::zeros({8});
            for (std::size_t i = 0; i < 8; ++i) b[i] = rng.normal();
            const Tensor x = solve_linear(a, b);
            for (std::size_t i = 0; i < 8; ++i) {
                double s = 0.0;
                for (std::size_t j = 0; j < 8; ++j) s += a.at(i, j) * x[j];
                CHECK(std::fabs(s - b[i]) <= 1e-8 * (1.0 + b.max_abs()));
            }
        }
    }
    SUBCASE("rank-deficient matrix is damped, all-zero matrix is singular") {
        // rank-1 PSD matrix with rhs in range: damping makes it solvable
        Tensor a({2, 2}, {1.0, 1.0, 1.0, 1.0});
        Tensor b({2}, {2.0, 2.0});
        CHECK_NOTHROW(solve_linear(a, b));
        Tensor zero = Tensor::zeros({3, 3});
        Tensor b3({3}, {1.0, 0.0, 0.0});
        CHECK_THROWS_AS(solve_linear(zero, b3), SingularMatrixError);
    }
}

TEST_CASE("sym_eigen reconstructs and orders") {
    Rng rng(17);
    Tensor a = random_spd(6, rng);
    const SymEigen eig = sym_eigen(a);
    for (std::size_t i = 0; i + 1 < 6; ++i) CHECK(eig.values[i] >= eig.values[i + 1]);
    // A v = lambda v for each eigenpair
    for (std::size_t r = 0; r < 6; ++r) {
        for (std::size_t i = 0; i < 6; ++i) {
            double av = 0.0;
            for (std::size_t j = 0; j < 6; ++j) av += a.at(i, j) * eig.vectors.at(r, j);
            CHECK(av == doctest::Approx(eig.values[r] * eig.vectors.at(r, i)).epsilon(1e-9));
        }
    }
}

TEST_CASE("singular values and numerical rank") {
    // rank-1 outer product
    Tensor u({3}, {1.0, 2.0, -1.0});
    Tensor v({4}, {0.5, 0.0, 1.0, 2.0});
    Tensor m = Tensor::zeros({3, 4});
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 4; ++j) m.at(i, j) = u[i] * v[j];
    const auto sv = singular_values(m);
    CHECK(sv[0] == doctest::Approx(u.l2_norm() * v.l2_norm()).epsilon(1e-10));
    CHECK(sv[1] < 1e-8 * sv[0]);
    CHECK(numerical_rank(m) == 1);
}

TEST_CASE("pca_2d rank-1 data has near-zero second variance") {
    Tensor rows = Tensor::zeros({20, 2});
    for (std::size_t i = 0; i < 20; ++i) {
        const double x = static_cast<double>(i) * 0.25 - 2.0;
        rows.at(i, 0) = x;
        rows.at(i, 1) = 2.0 * x;
    }
    const Pca2d p = pca_2d(rows);
    CHECK(!p.degenerate);
    CHECK(p.explained_variance[0] > 1.0);
    CHECK(p.explained_variance[1] == doctest::Approx(0.0).epsilon(1e-18));
}

TEST_CASE("pca_2d components orthonormal on gaussian sample") {
    Rng rng(29);
    Tensor rows = Tensor::zeros({200, 6});
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = rng.normal();
    const Pca2d p = pca_2d(rows);
    double c00 = 0.0, c01 = 0.0, c11 = 0.0;
    for (std::size_t j = 0; j < 6; ++j) {
        c00 += p.components.at(0, j) * p.components.at(0, j);
        c01 += p.components.at(0, j) * p.components.at(1, j);
        c11 += p.components.at(1, j) * p.components.at(1, j);
    }
    CHECK(std::fabs(c00 - 1.0) < 1e-10);
    CHECK(std::fabs(c11 - 1.0) < 1e-10);
    CHECK(std::fabs(c01) < 1e-10);
    // projections = centered rows x components^T
    for (std::size_t i = 0; i < 5; ++i) {
        double proj = 0.0;
        for (std::size_t j = 0; j < 6; ++j) {
            double mu = 0.0;
            for (std::size_t r = 0; r < 200; ++r) mu += rows.at(r, j);
            mu /= 200.0;
            proj += (rows.at(i, j) - mu) * p.components.at(0, j);
        }
        CHECK(p.projections.at(i, 0) == doctest::Approx(proj).epsilon(1e-9));
    }
}

TEST_CASE("pca_2d axis-aligned ellipse finds the long axis") {
    Rng rng(41);
    Tensor rows = Tensor::zeros({400, 2});
    for (std::size_t i = 0; i < 400; ++i) {
        rows.at(i, 0) = 3.0 * rng.normal();
        rows.at(i, 1) = 1.0 * rng.normal();
    }
    const Pca2d p = pca_2d(rows);
    const double angle =
        std::atan2(std::fabs(p.components.at(0, 1)), std::fabs(p.components.at(0, 0)));
    CHECK(angle < 5.0 * 3.141592653589793 / 180.0);
    CHECK(p.explained_variance[0] > p.explained_variance[1]);
}

TEST_CASE("pca_2d degenerate input flagged") {
    Tensor rows = Tensor::full({5, 3}, 2.5);
    const Pca2d p = pca_2d(rows);
    CHECK(p.degenerate);
    CHECK(p.projections.l1_norm() == 0.0);
    CHECK(p.explained_variance[0] == 0.0);
    CHECK(p.explained_variance[1] == 0.0);
}

TEST_CASE("pca_2d preconditions") {
    CHECK_THROWS_AS(pca_2d(Tensor::zeros({2, 4})), ContractError);
    CHECK_THROWS_AS(pca_2d(Tensor::zeros({5, 1})), ContractError);
}
