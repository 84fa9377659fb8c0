#include "edlab/kernels.hpp"

#include <cmath>
#include <cstring>

namespace edlab::kern {

namespace {

constexpr std::size_t kParallelFlops = 1u << 15;

inline double gelu_one(double x) {
    // 0.5x(1 + tanh(sqrt(2/pi)(x + 0.044715 x^3)))
    const double c = 0.7978845608028654;
    const double u = c * (x + 0.044715 * x * x * x);
    return 0.5 * x * (1.0 + std::tanh(u));
}

inline double gelu_grad_one(double x) {
    const double c = 0.7978845608028654;
    const double u = c * (x + 0.044715 * x * x * x);
    const double t = std::tanh(u);
    const double du = c * (1.0 + 3.0 * 0.044715 * x * x);
    return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du;
}

}  // namespace

namespace serial {

void matmul(const double* a, const double* b, double* c,
            std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t kk = 0; kk < k; ++kk) s += a[i * k + kk] * b[kk * n + j];
            c[i * n + j] = s;
        }
    }
}

void matmul_nt(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t kk = 0; kk < k; ++kk) s += a[i * k + kk] * b[j * k + kk];
            c[i * n + j] = s;
        }
    }
}

void matmul_tn(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t kk = 0; kk < k; ++kk) s += a[kk * m + i] * b[kk * n + j];
            c[i * n + j] = s;
        }
    }
}

void gelu(const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = gelu_one(x[i]);
}

void gelu_grad(const double* x, const double* gy, double* gx, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) gx[i] += gy[i] * gelu_grad_one(x[i]);
}

void accumulate_outer(double* c, const double* rows, std::size_t n_rows, std::size_t d) {
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t r = 0; r < n_rows; ++r) {
            const double v = rows[r * d + i];
            const double* row = rows + r * d;
            double* ci = c + i * d;
            for (std::size_t j = 0; j < d; ++j) ci[j] += v * row[j];
        }
    }
}

}  // namespace serial

// Parallel variants partition output rows; per-element accumulation order is
// the same ascending-k loop as the serial reference, so outputs match bitwise.

void matmul(const double* a, const double* b, double* c,
            std::size_t m, std::size_t k, std::size_t n) {
    if (m * n * k < kParallelFlops) {
        serial::matmul(a, b, c, m, k, n);
        return;
    }
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < m; ++i) {
        double* ci = c + i * n;
        const double* ai = a + i * k;
        std::memset(ci, 0, n * sizeof(double));
        for (std::size_t kk = 0; kk < k; ++kk) {
            const double av = ai[kk];
            const double* bk = b + kk * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += av * bk[j];
        }
    }
}

void matmul_nt(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n) {
    if (m * n * k < kParallelFlops) {
        serial::matmul_nt(a, b, c, m, k, n);
        return;
    }
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < m; ++i) {
        const double* ai = a + i * k;
        double* ci = c + i * n;
        for (std::size_t j = 0; j < n; ++j) {
            const double* bj = b + j * k;
            double s = 0.0;
            for (std::size_t kk = 0; kk < k; ++kk) s += ai[kk] * bj[kk];
            ci[j] = s;
        }
    }
}

void matmul_tn(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n) {
    if (m * n * k < kParallelFlops) {
        serial::matmul_tn(a, b, c, m, k, n);
        return;
    }
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < m; ++i) {
        double* ci = c + i * n;
        std::memset(ci, 0, n * sizeof(double));
        for (std::size_t kk = 0; kk < k; ++kk) {
            const double av = a[kk * m + i];
            const double* bk = b + kk * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += av * bk[j];
        }
    }
}

void gelu(const double* x, double* y, std::size_t n) {
    if (n < 4096) {
        serial::gelu(x, y, n);
        return;
    }
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < n; ++i) y[i] = gelu_one(x[i]);
}

void gelu_grad(const double* x, const double* gy, double* gx, std::size_t n) {
    if (n < 4096) {
        serial::gelu_grad(x, gy, gx, n);
        return;
    }
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < n; ++i) gx[i] += gy[i] * gelu_grad_one(x[i]);
}

void accumulate_outer(double* c, const double* rows, std::size_t n_rows, std::size_t d) {
    if (n_rows * d * d < kParallelFlops) {
        serial::accumulate_outer(c, rows, n_rows, d);
        return;
    }
    // Each thread owns a block of output rows; the per-entry accumulation
    // order over samples matches the serial loop.
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < d; ++i) {
        double* ci = c + i * d;
        for (std::size_t r = 0; r < n_rows; ++r) {
            const double v = rows[r * d + i];
            const double* row = rows + r * d;
            for (std::size_t j = 0; j < d; ++j) ci[j] += v * row[j];
        }
    }
}

}  // namespace edlab::kern
