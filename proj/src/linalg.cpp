#include "edlab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "edlab/errors.hpp"
#include "edlab/kernels.hpp"

namespace edlab {

namespace {

// PA = LU with partial pivoting; returns false on a zero pivot.
bool lu_factor(std::vector<double>& m, std::vector<int>& perm, std::size_t n) {
    perm.resize(n);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        double best = std::fabs(m[col * n + col]);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double v = std::fabs(m[r * n + col]);
            if (v > best) {
                best = v;
                pivot = r;
            }
        }
        if (best == 0.0) return false;
        if (pivot != col) {
            for (std::size_t j = 0; j < n; ++j) std::swap(m[col * n + j], m[pivot * n + j]);
            std::swap(perm[col], perm[pivot]);
        }
        const double inv = 1.0 / m[col * n + col];
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = m[r * n + col] * inv;
            m[r * n + col] = f;
            if (f == 0.0) continue;
            for (std::size_t j = col + 1; j < n; ++j) m[r * n + j] -= f * m[col * n + j];
        }
    }
    return true;
}

Tensor lu_solve(const std::vector<double>& lu, const std::vector<int>& perm, const Tensor& b,
                std::size_t n) {
    Tensor x = Tensor::zeros({n});
    for (std::size_t i = 0; i < n; ++i) x[i] = b[static_cast<std::size_t>(perm[i])];
    for (std::size_t i = 1; i < n; ++i) {
        double s = x[i];
        for (std::size_t j = 0; j < i; ++j) s -= lu[i * n + j] * x[j];
        x[i] = s;
    }
    for (std::size_t i = n; i-- > 0;) {
        double s = x[i];
        for (std::size_t j = i + 1; j < n; ++j) s -= lu[i * n + j] * x[j];
        x[i] = s / lu[i * n + i];
    }
    return x;
}

double residual_inf(const Tensor& a, const Tensor& x, const Tensor& b) {
    const std::size_t n = b.size();
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += a.at(i, j) * x[j];
        worst = std::max(worst, std::fabs(s - b[i]));
    }
    return worst;
}

}  // namespace

Tensor solve_linear(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || a.dim(0) != a.dim(1)) throw DimensionError("solve_linear: square matrix required");
    const std::size_t n = a.dim(0);
    if (b.size() != n) throw DimensionError("solve_linear: rhs length mismatch");

    const double tol = 1e-8 * (1.0 + b.max_abs());
    std::vector<int> perm;

    std::vector<double> lu(a.data(), a.data() + n * n);
    if (lu_factor(lu, perm, n)) {
        Tensor x = lu_solve(lu, perm, b, n);
        if (x.all_finite() && residual_inf(a, x, b) <= tol) return x;
    }

    double trace = 0.0;
    for (std::size_t i = 0; i < n; ++i) trace += a.at(i, i);
    const double delta = 1e-8 * trace / static_cast<double>(n);
    Tensor damped = a;
    for (std::size_t i = 0; i < n; ++i) damped.at(i, i) += delta;
    lu.assign(damped.data(), damped.data() + n * n);
    if (!lu_factor(lu, perm, n)) throw SingularMatrixError("solve_linear: singular beyond damping");
    Tensor x = lu_solve(lu, perm, b, n);
    const double damped_tol = 1e-8 * (1.0 + b.max_abs());
    if (!x.all_finite() || residual_inf(damped, x, b) > damped_tol)
        throw SingularMatrixError("solve_linear: damped solve failed residual check");
    return x;
}

SymEigen sym_eigen(const Tensor& a) {
    if (a.rank() != 2 || a.dim(0) != a.dim(1)) throw DimensionError("sym_eigen: square matrix required");
    const std::size_t n = a.dim(0);
    Tensor m = a;
    // symmetrize to absorb roundoff in the input
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double v = 0.5 * (m.at(i, j) + m.at(j, i));
            m.at(i, j) = v;
            m.at(j, i) = v;
        }
    Tensor v = Tensor::identity(n);

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) off += m.at(i, j) * m.at(i, j);
        if (off < 1e-26) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = m.at(p, q);
                if (std::fabs(apq) < 1e-300) continue;
                const double app = m.at(p, p);
                const double aqq = m.at(q, q);
                const double theta = (aqq - app) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double mkp = m.at(k, p);
                    const double mkq = m.at(k, q);
                    m.at(k, p) = c * mkp - s * mkq;
                    m.at(k, q) = s * mkp + c * mkq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double mpk = m.at(p, k);
                    const double mqk = m.at(q, k);
                    m.at(p, k) = c * mpk - s * mqk;
                    m.at(q, k) = s * mpk + c * mqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v.at(k, p);
                    const double vkq = v.at(k, q);
                    v.at(k, p) = c * vkp - s * vkq;
                    v.at(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&m](std::size_t i, std::size_t j) { return m.at(i, i) > m.at(j, j); });

    SymEigen out;
    out.values = Tensor::zeros({n});
    out.vectors = Tensor::zeros({n, n});
    for (std::size_t r = 0; r < n; ++r) {
        const std::size_t src = order[r];
        out.values[r] = m.at(src, src);
        double lead = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            if (std::fabs(v.at(k, src)) > 1e-14) {
                lead = v.at(k, src);
                break;
            }
        }
        const double sign = lead < 0.0 ? -1.0 : 1.0;
        for (std::size_t k = 0; k < n; ++k) out.vectors.at(r, k) = sign * v.at(k, src);
    }
    return out;
}

std::vector<double> singular_values(const Tensor& m) {
    if (m.rank() != 2) throw DimensionError("singular_values: rank-2 tensor required");
    const std::size_t r = m.dim(0), c = m.dim(1);
    const bool rows_smaller = r <= c;
    const std::size_t d = rows_smaller ? r : c;
    Tensor gram = Tensor::zeros({d, d});
    if (rows_smaller) {
        kern::matmul_nt(m.data(), m.data(), gram.data(), r, c, r);  // M M^T
    } else {
        kern::matmul_tn(m.data(), m.data(), gram.data(), c, r, c);  // M^T M
    }
    SymEigen eig = sym_eigen(gram);
    std::vector<double> sv(d);
    for (std::size_t i = 0; i < d; ++i) sv[i] = std::sqrt(std::max(0.0, eig.values[i]));
    return sv;
}

int numerical_rank(const Tensor& m, double rel_tol) {
    const std::vector<double> sv = singular_values(m);
    if (sv.empty() || sv[0] == 0.0) return 0;
    int rank = 0;
    for (double s : sv) {
        if (s > rel_tol * sv[0]) ++rank;
    }
    return rank;
}

}  // namespace edlab
