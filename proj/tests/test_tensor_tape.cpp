#include <cmath>
#include <vector>

#include "doctest.h"
#include "edlab/errors.hpp"
#include "edlab/kernels.hpp"
#include "edlab/rng.hpp"
#include "edlab/tape.hpp"
#include "edlab/tensor.hpp"

using namespace edlab;

namespace {

Tensor random_tensor(std::vector<std::size_t> shape, Rng& rng, double scale = 1.0) {
    Tensor t = Tensor::zeros(std::move(shape));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = scale * rng.normal();
    return t;
}

}  // namespace

TEST_CASE("tensor rejects non-finite entries at construction") {
    CHECK_THROWS_AS(Tensor({2}, {1.0, std::nan("")}), NumericError);
    CHECK_THROWS_AS(Tensor({2}, {1.0, INFINITY}), NumericError);
    CHECK_THROWS_AS(Tensor({3}, {1.0, 2.0}), DimensionError);
    CHECK_NOTHROW(Tensor({2, 2}, {1.0, 2.0, 3.0, 4.0}));
}

TEST_CASE("matmul identity and hand arithmetic") {
    Tape t;
    auto i3 = t.leaf(Tensor::identity(3));
    Rng rng(7);
    Tensor a = random_tensor({3, 4}, rng);
    auto av = t.leaf(&a);
    CHECK(t.value(t.matmul(i3, av)) == a);

    auto m = t.leaf(Tensor({2, 2}, {1, 2, 3, 4}));
    auto v = t.leaf(Tensor({2, 1}, {5, 6}));
    const Tensor& prod = t.value(t.matmul(m, v));
    CHECK(prod.at(0, 0) == 17.0);
    CHECK(prod.at(1, 0) == 39.0);
}

TEST_CASE("matmul shape mismatch raises dimension error") {
    Tape t;
    auto a = t.leaf(Tensor::zeros({2, 3}));
    auto b = t.leaf(Tensor::zeros({4, 5}));
    CHECK_THROWS_AS(t.matmul(a, b), DimensionError);
}

TEST_CASE("gradient of sum(a*b) w.r.t. a equals ones*b^T") {
    Rng rng(11);
    Tensor a = random_tensor({5, 4}, rng);
    Tensor b = random_tensor({4, 3}, rng);

    Tape t;
    auto av = t.leaf(&a, true);
    auto bv = t.leaf(&b);
    auto loss = t.sum(t.matmul(av, bv));
    auto grads = t.backward(loss);
    const Tensor& ga = grads.of(av);

    // expected: ones(5x3) * b^T, i.e. each row = column sums of b^T = row sums of b... per entry sum_j b[k][j]
    for (std::size_t i = 0; i < 5; ++i) {
        for (std::size_t k = 0; k < 4; ++k) {
            double want = 0.0;
            for (std::size_t j = 0; j < 3; ++j) want += b.at(k, j);
            CHECK(ga.at(i, k) == doctest::Approx(want).epsilon(1e-12));
        }
    }

    // and the finite-difference route agrees
    const double err = finite_diff_check(
        [&b](Tape& tape, Tape::Var x) { return tape.sum(tape.matmul(x, tape.leaf(&b))); }, a, 1e-6);
    CHECK(err < 1e-6);
}

TEST_CASE("backward simple scalar cases") {
    SUBCASE("x*x at 3 gives 6") {
        Tape t;
        auto x = t.leaf(Tensor::scalar(3.0), true);
        auto loss = t.sum(t.mul(x, x));
        CHECK(t.backward(loss).of(x)[0] == doctest::Approx(6.0).epsilon(1e-15));
    }
    SUBCASE("sum of squares of (1,-2) gives (2,-4)") {
        Tape t;
        auto z = t.leaf(Tensor({2}, {1.0, -2.0}), true);
        auto loss = t.sum_sq(z);
        auto grads = t.backward(loss);
        const Tensor& g = grads.of(z);
        CHECK(g[0] == doctest::Approx(2.0));
        CHECK(g[1] == doctest::Approx(-4.0));
    }
    SUBCASE("softmax cross-entropy of [1,2,3] vs class 2") {
        Tape t;
        auto logits = t.leaf(Tensor({1, 3}, {1.0, 2.0, 3.0}), true);
        auto loss = t.nll_row(logits, 0, 2);
        auto grads = t.backward(loss);
        const Tensor& g = grads.of(logits);
        // closed form: softmax - onehot
        const double z = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
        CHECK(g.at(0, 0) == doctest::Approx(std::exp(1.0) / z).epsilon(1e-12));
        CHECK(g.at(0, 1) == doctest::Approx(std::exp(2.0) / z).epsilon(1e-12));
        CHECK(g.at(0, 2) == doctest::Approx(std::exp(3.0) / z - 1.0).epsilon(1e-12));

        Tensor x({1, 3}, {1.0, 2.0, 3.0});
        const double err = finite_diff_check(
            [](Tape& tape, Tape::Var v) { return tape.nll_row(v, 0, 2); }, x, 1e-5);
        CHECK(err < 1e-8);
    }
    SUBCASE("non-scalar root rejected") {
        Tape t;
        auto x = t.leaf(Tensor({2}, {1.0, 2.0}), true);
        CHECK_THROWS_AS(t.backward(x), ContractError);
    }
}

TEST_CASE("finite_diff_check on simple functions") {
    Rng rng(5);
    Tensor x = random_tensor({10}, rng);
    const double err =
        finite_diff_check([](Tape& t, Tape::Var v) { return t.sum_sq(v); }, x, 1e-6);
    CHECK(err < 1e-6);

    // constant function: zero gradient, zero error
    const double cerr = finite_diff_check(
        [](Tape& t, Tape::Var) { return t.leaf(Tensor::scalar(4.0)); }, x, 1e-5);
    CHECK(cerr == 0.0);

    CHECK_THROWS_AS(finite_diff_check(
                        [](Tape& t, Tape::Var v) { return t.sum(v); }, x, 0.0),
                    ContractError);
}

TEST_CASE("finite differences validate every differentiable op") {
    Rng rng(23);
    const double tol = 1e-4;
    const double eps = 1e-5;

    SUBCASE("add/mul/scale") {
        Tensor x = random_tensor({3, 4}, rng);
        Tensor other = random_tensor({3, 4}, rng);
        CHECK(finite_diff_check(
                  [&other](Tape& t, Tape::Var v) {
                      auto o = t.leaf(&other);
                      return t.sum_sq(t.add(t.mul(v, o), t.scale(v, -0.7)));
                  },
                  x, eps) < tol);
    }
    SUBCASE("matmul family") {
        Tensor x = random_tensor({4, 5}, rng);
        Tensor b = random_tensor({5, 3}, rng);
        CHECK(finite_diff_check(
                  [&b](Tape& t, Tape::Var v) { return t.sum_sq(t.matmul(v, t.leaf(&b))); }, x,
                  eps) < tol);
        Tensor bn = random_tensor({3, 5}, rng);
        CHECK(finite_diff_check(
                  [&bn](Tape& t, Tape::Var v) { return t.sum_sq(t.matmul_nt(v, t.leaf(&bn))); },
                  x, eps) < tol);
        Tensor bt = random_tensor({4, 3}, rng);
        CHECK(finite_diff_check(
                  [&bt](Tape& t, Tape::Var v) { return t.sum_sq(t.matmul_tn(v, t.leaf(&bt))); },
                  x, eps) < tol);
        // gradient w.r.t. the right operand
        Tensor a = random_tensor({3, 4}, rng);
        CHECK(finite_diff_check(
                  [&a](Tape& t, Tape::Var v) { return t.sum_sq(t.matmul(t.leaf(&a), v)); }, x,
                  eps) < tol);
    }
    SUBCASE("gelu") {
        Tensor x = random_tensor({40}, rng);
        CHECK(finite_diff_check([](Tape& t, Tape::Var v) { return t.sum_sq(t.gelu(v)); }, x,
                                eps) < tol);
    }
    SUBCASE("layernorm") {
        Tensor x = random_tensor({3, 8}, rng);
        Tensor gain = random_tensor({8}, rng, 0.5);
        Tensor bias = random_tensor({8}, rng, 0.5);
        CHECK(finite_diff_check(
                  [&](Tape& t, Tape::Var v) {
                      return t.sum_sq(t.layernorm(v, t.leaf(&gain), t.leaf(&bias)));
                  },
                  x, eps) < tol);
        // w.r.t. gain and bias too
        CHECK(finite_diff_check(
                  [&](Tape& t, Tape::Var v) {
                      return t.sum_sq(t.layernorm(t.leaf(&x), v, t.leaf(&bias)));
                  },
                  gain, eps) < tol);
    }
    SUBCASE("softmax with causal mask") {
        Tensor x = random_tensor({5, 5}, rng);
        Tensor w = random_tensor({5, 5}, rng);
        CHECK(finite_diff_check(
                  [&w](Tape& t, Tape::Var v) {
                      return t.sum_sq(t.mul(t.softmax_rows(t.causal_mask(v)), t.leaf(&w)));
                  },
                  x, eps) < tol);
    }
    SUBCASE("structure ops") {
        Tensor x = random_tensor({4, 6}, rng);
        Tensor z = random_tensor({6}, rng);
        CHECK(finite_diff_check(
                  [&z](Tape& t, Tape::Var v) {
                      auto parts = std::vector<Tape::Var>{t.slice_cols(v, 0, 3), t.slice_cols(v, 3, 3)};
                      auto back = t.concat_cols(parts);
                      auto rep = t.replace_row(back, 1, t.leaf(&z));
                      return t.sum_sq(t.gather_rows(rep, {2, 0, 2}));
                  },
                  x, eps) < tol);
        CHECK(finite_diff_check(
                  [&x](Tape& t, Tape::Var v) {
                      return t.sum_sq(t.replace_row(t.leaf(&x), 2, v));
                  },
                  z, eps) < tol);
    }
    SUBCASE("cross entropy and KL") {
        Tensor x = random_tensor({4, 7}, rng);
        CHECK(finite_diff_check(
                  [](Tape& t, Tape::Var v) { return t.mean_cross_entropy(v, {3, -1, 0, 6}); }, x,
                  eps) < tol);
        Tensor ref = Tensor::zeros({7});
        double z = 0.0;
        for (std::size_t i = 0; i < 7; ++i) z += std::exp(0.1 * static_cast<double>(i));
        for (std::size_t i = 0; i < 7; ++i) ref[i] = 0.1 * static_cast<double>(i) - std::log(z);
        CHECK(finite_diff_check(
                  [&ref](Tape& t, Tape::Var v) { return t.kl_row_to_ref(v, 1, ref); }, x, eps) <
              tol);
    }
}

TEST_CASE("matmul associativity within 1e-9 relative") {
    Rng rng(31);
    Tensor a = random_tensor({6, 5}, rng);
    Tensor b = random_tensor({5, 7}, rng);
    Tensor c = random_tensor({7, 4}, rng);
    Tape t;
    auto av = t.leaf(&a), bv = t.leaf(&b), cv = t.leaf(&c);
    const Tensor& left = t.value(t.matmul(t.matmul(av, bv), cv));
    const Tensor& right = t.value(t.matmul(av, t.matmul(bv, cv)));
    for (std::size_t i = 0; i < left.size(); ++i) {
        CHECK(std::fabs(left[i] - right[i]) <= 1e-9 * (1.0 + std::fabs(right[i])));
    }
}

TEST_CASE("parallel kernels match serial reference bitwise") {
    Rng rng(13);
    const std::size_t m = 37, k = 64, n = 29;
    Tensor a = random_tensor({m, k}, rng);
    Tensor b = random_tensor({k, n}, rng);
    Tensor c_par = Tensor::zeros({m, n});
    Tensor c_ser = Tensor::zeros({m, n});

    kern::matmul(a.data(), b.data(), c_par.data(), m, k, n);
    kern::serial::matmul(a.data(), b.data(), c_ser.data(), m, k, n);
    CHECK(c_par == c_ser);

    Tensor bt = random_tensor({n, k}, rng);
    kern::matmul_nt(a.data(), bt.data(), c_par.data(), m, k, n);
    kern::serial::matmul_nt(a.data(), bt.data(), c_ser.data(), m, k, n);
    CHECK(c_par == c_ser);

    Tensor at = random_tensor({k, m}, rng);
    kern::matmul_tn(at.data(), b.data(), c_par.data(), m, k, n);
    kern::serial::matmul_tn(at.data(), b.data(), c_ser.data(), m, k, n);
    CHECK(c_par == c_ser);

    Tensor x = random_tensor({9000}, rng);
    Tensor y1 = Tensor::zeros({9000});
    Tensor y2 = Tensor::zeros({9000});
    kern::gelu(x.data(), y1.data(), x.size());
    kern::serial::gelu(x.data(), y2.data(), x.size());
    CHECK(y1 == y2);

    Tensor rows = random_tensor({40, 48}, rng);
    Tensor c1 = Tensor::zeros({48, 48});
    Tensor c2 = Tensor::zeros({48, 48});
    kern::accumulate_outer(c1.data(), rows.data(), 40, 48);
    kern::serial::accumulate_outer(c2.data(), rows.data(), 40, 48);
    CHECK(c1 == c2);
}

TEST_CASE("backward leaves untouched leaves at zero") {
    Tape t;
    auto x = t.leaf(Tensor({2}, {1.0, 2.0}), true);
    auto unused = t.leaf(Tensor({3}, {1.0, 1.0, 1.0}), true);
    auto loss = t.sum_sq(x);
    auto grads = t.backward(loss);
    CHECK(grads.reached(x));
    CHECK(!grads.reached(unused));
    const Tensor& gz = grads.of(unused);
    CHECK(gz.size() == 3);
    CHECK(gz.l1_norm() == 0.0);
}
