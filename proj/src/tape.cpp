#include "edlab/tape.hpp"

#include <cmath>
#include <cstring>

#include "edlab/errors.hpp"
#include "edlab/kernels.hpp"

namespace edlab {

namespace {

void check_rank2(const Tensor& t, const char* op) {
    if (t.rank() != 2) throw DimensionError(std::string(op) + ": rank-2 tensor required");
}

// softmax of one row into out, numerically shifted by the row max
void softmax_row(const double* x, double* out, std::size_t n) {
    double m = x[0];
    for (std::size_t i = 1; i < n; ++i) m = std::max(m, x[i]);
    double z = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = std::exp(x[i] - m);
        z += out[i];
    }
    const double inv = 1.0 / z;
    for (std::size_t i = 0; i < n; ++i) out[i] *= inv;
}

double log_sum_exp(const double* x, std::size_t n) {
    double m = x[0];
    for (std::size_t i = 1; i < n; ++i) m = std::max(m, x[i]);
    double z = 0.0;
    for (std::size_t i = 0; i < n; ++i) z += std::exp(x[i] - m);
    return m + std::log(z);
}

constexpr double kLnEps = 1e-5;

}  // namespace

const Tensor& Tape::value_by_id(std::uint32_t id) const {
    const Node& n = nodes_[id];
    return n.ext ? *n.ext : n.owned;
}

Tape::Var Tape::push(Tensor value, const std::vector<Var>& inputs, BackFn back) {
    Node n;
    n.owned = std::move(value);
    n.in.reserve(inputs.size());
    for (Var v : inputs) {
        n.in.push_back(v.id);
        if (nodes_[v.id].relevant) n.relevant = true;
    }
    n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Tape::Var Tape::leaf(Tensor value, bool requires_grad) {
    Node n;
    n.owned = std::move(value);
    n.relevant = requires_grad;
    nodes_.push_back(std::move(n));
    return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Tape::Var Tape::leaf(const Tensor* value, bool requires_grad) {
    Node n;
    n.ext = value;
    n.relevant = requires_grad;
    nodes_.push_back(std::move(n));
    return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Tape::Var Tape::add(Var a, Var b) {
    const Tensor& av = value(a);
    const Tensor& bv = value(b);
    if (!av.same_shape(bv)) throw DimensionError("add: shape mismatch");
    Tensor out = av;
    out.add_scaled(bv, 1.0);
    return push(std::move(out), {a, b},
                [](const Tape&, const Tensor& gout, const std::vector<Tensor*>& gin) {
                    if (gin[0]) gin[0]->add_scaled(gout, 1.0);
                    if (gin[1]) gin[1]->add_scaled(gout, 1.0);
                });
}

Tape::Var Tape::mul(Var a, Var b) {
    const Tensor& av = value(a);
    const Tensor& bv = value(b);
    if (!av.same_shape(bv)) throw DimensionError("mul: shape mismatch");
    Tensor out = av;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
    const auto ai = a.id, bi = b.id;
    return push(std::move(out), {a, b},
                [ai, bi](const Tape& t, const Tensor& gout, const std::vector<Tensor*>& gin) {
                    const Tensor& av = t.value_by_id(ai);
                    const Tensor& bv = t.value_by_id(bi);
                    if (gin[0])
                        for (std::size_t i = 0; i < gout.size(); ++i) (*gin[0])[i] += gout[i] * bv[i];
                    if (gin[1])
                        for (std::size_t i = 0; i < gout.size(); ++i) (*gin[1])[i] += gout[i] * av[i];
                });
}

Tape::Var Tape::scale(Var a, double s) {
    Tensor out = value(a) * s;
    return push(std::move(out), {a},
                [s](const Tape&, const Tensor& gout, const std::vector<Tensor*>& gin) {
                    if (gin[0]) gin[0]->add_scaled(gout, s);
                });
}

Tape::Var Tape::matmul(Var a, Var b) {
    const Tensor& av = value(a);
    const Tensor& bv = value(b);
    check_rank2(av, "matmul");
    check_rank2(bv, "matmul");
    if (av.dim(1) != bv.dim(0)) throw DimensionError("matmul: inner dimensions differ");
    const std::size_t m = av.dim(0), k = av.dim(1), n = bv.dim(1);
    Tensor out = Tensor::zeros({m, n});
    kern::matmul(av.data(), bv.data(), out.data(), m, k, n);
    const auto ai = a.id, bi = b.id;
    return push(std::move(out), {a, b},
                [ai, bi, m, k, n](const Tape& t, const Tensor& gout, const std::vector<Tensor*>& gin) {
                    if (gin[0]) {  // dA = gout * B^T
                        Tensor tmp = Tensor::zeros({m, k});
                        kern::matmul_nt(gout.data(), t.value_by_id(bi).data(), tmp.data(), m, n, k);
                        gin[0]->add_scaled(tmp, 1.0);
                    }
                    if (gin[1]) {  // dB = A^T * gout
                        Tensor tmp = Tensor::zeros({k, n});
                        kern::matmul_tn(t.value_by_id(ai).data(), gout.data(), tmp.data(), k, m, n);
                        gin[1]->add_scaled(tmp, 1.0);
                    }
                });
}

Tape::Var Tape::matmul_nt(Var a, Var b) {
    const Tensor& av = value(a);
    const Tensor& bv = value(b);
    check_rank2(av, "matmul_nt");
    check_rank2(bv, "matmul_nt");
    if (av.dim(1) != bv.dim(1)) throw DimensionError("matmul_nt: inner dimensions differ");
    const std::size_t m = av.dim(0), k = av.dim(1), n = bv.dim(0);
    Tensor out = Tensor::zeros({m, n});
    kern::matmul_nt(av.data(), bv.data(), out.data(), m, k, n);
    const auto ai = a.id, bi = b.id;
    return push(std::move(out), {a, b},
                [ai, bi, m, k, n](const Tape& t, const Tensor& gout, const std::vector<Tensor*>& gin) {
                    if (gin[0]) {  // dA = gout * B
                        Tensor tmp = Tensor::zeros({m, k});
                        kern::matmul(gout.data(), t.value_by_id(bi).data(), tmp.data(), m, n, k);
                        gin[0]->add_scaled(tmp, 1.0);
                    }
                    if (gin[1]) {  // dB = gout^T * A
                        Tensor tmp = Tensor::zeros({n, k});
                        kern::matmul_tn(gout.data(), t.value_by_id(ai).data(), tmp.data(), n, m, k);
                        gin[1]->add_scaled(tmp, 1.0);
                    }
                });
}

Tape::Var Tape::matmul_tn(Var a, Var b) {
    const Tensor& av = value(a);
    const Tensor& bv = value(b);
    check_rank2(av, "matmul_tn");
    check_rank2(bv, "matmul_tn");
    if (av.dim(0) != bv.dim(0)) throw DimensionError("matmul_tn: inner dimensions differ");
    const std::size_t k = av.dim(0), m = av.dim(1), n = bv.dim(1);
    Tensor out = Tensor::zeros({m, n});
    kern::matmul_tn(av.data(), bv.data(), out.data(), m, k, n);
    const auto ai = a.id, bi = b.id;
    return push(std::move(out), {a, b},
                [ai, bi, m, k, n](const Tape& t, const Tensor& gout, const std::vector<Tensor*>& gin) {
                    if (gin[0]) {  // dA = B * gout^T
                        Tensor tmp = Tensor::zeros({k, m});
                        kern::matmul_nt(t.value_by_id(bi).data(), gout.data(), tmp.data(), k, n, m);
                        gin[0]->add_scaled(tmp, 1.0);
                    }
                    if (gin[1]) {  // dB = A * gout
                        Tensor tmp = Tensor::zeros({k, n});
                        kern::matmul(t.value_by_id(ai).data(), gout.data(), tmp.data(), k, m, n);
                        gin[1]->add_scaled(tmp, 1.0);
                    }
                });
}

Tape::Var Tape::gather_rows(Var m, std::vector<int> row_ids) {
    const Tensor& mv = value(m);
    check_rank2(mv, "gather_rows");
    const std::size_t cols = mv.dim(1);
    Tensor out = Tensor::zeros({row_ids.size(), cols});
    for (std::size_t r = 0; r < row_ids.size(); ++r) {
        const int src = row_ids[r];
        if (src < 0 || static_cast<std::size_t>(src) >= mv.dim(0))
            throw IndexError("gather_rows: row id out of range");
        std::memcpy(out.data() + r * cols, mv.data() + static_cast<std::size_t>(src) * cols,
                    cols * sizeof(double));
    }
    return push(std::move(out), {m},
                [ids = std::move(row_ids), cols](const Tape&, const Tensor& gout,
                                                 const std::vector<Tensor*>& gin) {
                    if (!gin[0]) return;
                    for (std::size_t r = 0; r < ids.size(); ++r) {
                        double* dst = gin[0]->data() + static_cast<std::size_t>(ids[r]) * cols;
                        const double* src = gout.data() + r * cols;
                        for (std::size_t j = 0; j < cols; ++j) dst[j] += src[j];
                    }
                });
}

Tape::Var Tape::slice_cols(Var a, std::size_t start, std::size_t len) {
    const Tensor& av = value(a);
    check_rank2(av, "slice_cols");
    if (start + len > av.dim(1)) throw IndexError("slice_cols: range out of bounds");
    const std::size_t rows = av.dim(0), cols = av.dim(1);
    Tensor out = Tensor::zeros({rows, len});
    for (std::size_t i = 0; i < rows; ++i)
        std::memcpy(out.data() + i * len, av.data() + i * cols + start, len * sizeof(double));
    return push(std::move(out), {a},
                [start, len, cols](const Tape&, const Tensor& gout, const std::vector<Tensor*>& gin) {
                    if (!gin[0]) return;
                    const std::size_t rows = gout.dim(0);
                    for (std::size_t i = 0; i < rows; ++i) {
                        double* dst = gin[0]->data() + i * cols + start;
                        const double* src = gout.data() + i * len;
                        for (std::size_t j = 0; j < len; ++j) dst[j] += src[j];
                    }
                });
}

Tape::Var Tape::concat_cols(const std::vector<Var>& parts) {
    if (parts.empty()) throw ContractError("concat_cols: no parts");
    const std::size_t rows = value(parts[0]).dim(0);
    std::size_t total = 0;
    std::vector<std::size_t> widths;
    for (Var p : parts) {
        const Tensor& pv = value(p);
        check_rank2(pv, "concat_cols");
        if (pv.dim(0) != rows) throw DimensionError("concat_cols: row count mismatch");
        widths.push_back(pv.dim(1));
        total += pv.dim(1);
    }
    Tensor out = Tensor::zeros({rows, total});
    std::size_t off = 0;
    for (std::size_t p = 0; p < parts.size(); ++p) {
        const Tensor& pv = value(parts[p]);
        for (std::size_t i = 0; i < rows; ++i)
            std::memcpy(out.data() + i * total + off, pv.data() + i * widths[p],
                        widths[p] * sizeof(double));
        off += widths[p];
    }
    return push(std::move(out), parts,
                [widths = std::move(widths), total](const Tape&, const Tensor& gout,
                                                    const std::vector<Tensor*>& gin) {
                    const std::size_t rows = gout.dim(0);
                    std::size_t off = 0;
                    for (std::size_t p = 0; p < widths.size(); ++p) {
                        if (gin[p]) {
                            for (std::size_t i = 0; i < rows; ++i) {
                                double* dst = gin[p]->data() + i * widths[p];
                                const double* src = gout.data() + i * total + off;
                                for (std::size_t j = 0; j < widths[p]; ++j) dst[j] += src[j];
                            }
                        }
                        off += widths[p];
                    }
                });
}

Tape::Var Tape::pick_row(Var a, std::size_t row) {
    const Tensor& av = value(a);
    check_rank2(av, "pick_row");
    if (row >= av.dim(0)) throw IndexError("pick_row: row out of range");
    Tensor out = av.row(row);
    const std::size_t cols = av.dim(1);
    return push(std::move(out), {a},
                [row, cols](const Tape&, const Tensor& gout, const std::vector<Tensor*>& gin) {
                    if (!gin[0]) return;
                    double* dst = gin[0]->data() + row * cols;
                    for (std::size_t j = 0; j < cols; ++j) dst[j] += gout[j];
                });
}

Tape::Var Tape::replace_row(Var a, std::size_t row, Var z) {
    const Tensor& av = value(a);
    const Tensor& zv = value(z);
    check_rank2(av, "replace_row");
    if (row >= av.dim(0)) throw IndexError("replace_row: row out of range");
    if (zv.rank() != 1 || zv.dim(0) != av.dim(1))
        throw DimensionError("replace_row: replacement dimension mismatch");
    Tensor out = av;
    out.set_row(row, zv);
    const std::size_t cols = av.dim(1);
    return push(std::move(out), {a, z},
                [row, cols](const Tape&, const Tensor& gout, const std::vector<Tensor*>& gin) {
                    const std::size_t rows = gout.dim(0);
                    if (gin[0]) {
                        for (std::size_t i = 0; i < rows; ++i) {
                            if (i == row) continue;
                            double* dst = gin[0]->data() + i * cols;
                            const double* src = gout.data() + i * cols;
                            for (std::size_t j = 0; j < cols; ++j) dst[j] += src[j];
                        }
                    }
                    if (gin[1]) {
                        const double* src = gout.data() + row * cols;
                        for (std::size_t j = 0; j < cols; ++j) (*gin[1])[j] += src[j];
                    }
                });
}

Tape::Var Tape::gelu(Var a) {
    const Tensor& av = value(a);
    Tensor out = Tensor::zeros(av.shape());
    kern::gelu(av.data(), out.data(), av.size());
    const auto ai = a.id;
    return push(std::move(out), {a},
                [ai](const Tape& t, const Tensor& gout, const std::vector<Tensor*>& gin) {
                    if (!gin[0]) return;
                    const Tensor& av = t.value_by_id(ai);
                    kern::gelu_grad(av.data(), gout.data(), gin[0]->data(), av.size());
                });
}

Tape::Var Tape::layernorm(Var a, Var gain, Var bias) {
    const Tensor& av = value(a);
    const Tensor& gv = value(gain);
    const Tensor& bv = value(bias);
    check_rank2(av, "layernorm");
    const std::size_t rows = av.dim(0), n = av.dim(1);
    if (gv.size() != n || bv.size() != n) throw DimensionError("layernorm: gain/bias dimension mismatch");
    Tensor out = Tensor::zeros({rows, n});
    for (std::size_t i = 0; i < rows; ++i) {
        const double* x = av.data() + i * n;
        double* y = out.data() + i * n;
        double mu = 0.0;
        for (std::size_t j = 0; j < n; ++j) mu += x[j];
        mu /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t j = 0; j < n; ++j) var += (x[j] - mu) * (x[j] - mu);
        var /= static_cast<double>(n);
        const double inv = 1.0 / std::sqrt(var + kLnEps);
        for (std::size_t j = 0; j < n; ++j) y[j] = (x[j] - mu) * inv * gv[j] + bv[j];
    }
    const auto ai = a.id, gi = gain.id;
    return push(std::move(out), {a, gain, bias},
                [ai, gi, rows, n](const Tape& t, const Tensor& gout, const std::vector<Tensor*>& gin) {
                    const Tensor& av = t.value_by_id(ai);
                    const Tensor& gv = t.value_by_id(gi);
                    std::vector<double> xhat(n);
                    for (std::size_t i = 0; i < rows; ++i) {
                        const double* x = av.data() + i * n;
                        const double* go = gout.data() + i * n;
                        double mu = 0.0;
                        for (std::size_t j = 0; j < n; ++j) mu += x[j];
                        mu /= static_cast<double>(n);
                        double var = 0.0;
                        for (std::size_t j = 0; j < n; ++j) var += (x[j] - mu) * (x[j] - mu);
                        var /= static_cast<double>(n);
                        const double inv = 1.0 / std::sqrt(var + kLnEps);
                        for (std::size_t j = 0; j < n; ++j) xhat[j] = (x[j] - mu) * inv;
                        if (gin[1])
                            for (std::size_t j = 0; j < n; ++j) (*gin[1])[j] += go[j] * xhat[j];
                        if (gin[2])
                            for (std::size_t j = 0; j < n; ++j) (*gin[2])[j] += go[j];
                        if (gin[0]) {
                            double mean_g = 0.0, mean_gx = 0.0;
                            for (std::size_t j = 0; j < n; ++j) {
                                const double gh = go[j] * gv[j];
                                mean_g += gh;
                                mean_gx += gh * xhat[j];
                            }
                            mean_g /= static_cast<double>(n);
                            mean_gx /= static_cast<double>(n);
                            double* dst = gin[0]->data() + i * n;
                            for (std::size_t j = 0; j < n; ++j) {
                                const double gh = go[j] * gv[j];
                                dst[j] += inv * (gh - mean_g - xhat[j] * mean_gx);
                            }
                        }
                    }
                });
}

Tape::Var Tape::softmax_rows(Var a) {
    const Tensor& av = value(a);
    check_rank2(av, "softmax_rows");
    const std::size_t rows = av.dim(0), n = av.dim(1);
    Tensor out = Tensor::zeros({rows, n});
    for (std::size_t i = 0; i < rows; ++i) softmax_row(av.data() + i * n, out.data() + i * n, n);
    Var v = push(std::move(out), {a}, nullptr);
    const auto self = v.id;
    nodes_[self].back = [self, rows, n](const Tape& t, const Tensor& gout,
                                        const std::vector<Tensor*>& gin) {
        if (!gin[0]) return;
        const Tensor& y = t.value_by_id(self);
        for (std::size_t i = 0; i < rows; ++i) {
            const double* yi = y.data() + i * n;
            const double* go = gout.data() + i * n;
            double inner = 0.0;
            for (std::size_t j = 0; j < n; ++j) inner += go[j] * yi[j];
            double* dst = gin[0]->data() + i * n;
            for (std::size_t j = 0; j < n; ++j) dst[j] += yi[j] * (go[j] - inner);
        }
    };
    return v;
}

Tape::Var Tape::causal_mask(Var scores) {
    const Tensor& sv = value(scores);
    check_rank2(sv, "causal_mask");
    if (sv.dim(0) != sv.dim(1)) throw DimensionError("causal_mask: square scores required");
    const std::size_t n = sv.dim(0);
    Tensor out = sv;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) out.at(i, j) = -1e30;
    return push(std::move(out), {scores},
                [n](const Tape&, const Tensor& gout, const std::vector<Tensor*>& gin) {
                    if (!gin[0]) return;
                    for (std::size_t i = 0; i < n; ++i)
                        for (std::size_t j = 0; j <= i; ++j) gin[0]->at(i, j) += gout.at(i, j);
                });
}

Tape::Var Tape::sum(Var a) {
    const Tensor& av = value(a);
    Tensor out = Tensor::scalar(av.sum());
    return push(std::move(out), {a},
                [](const Tape&, const Tensor& gout, const std::vector<Tensor*>& gin) {
                    if (!gin[0]) return;
                    const double g = gout[0];
                    for (std::size_t i = 0; i < gin[0]->size(); ++i) (*gin[0])[i] += g;
                });
}

Tape::Var Tape::sum_sq(Var a) {
    const Tensor& av = value(a);
    double s = 0.0;
    for (std::size_t i = 0; i < av.size(); ++i) s += av[i] * av[i];
    const auto ai = a.id;
    return push(Tensor::scalar(s), {a},
                [ai](const Tape& t, const Tensor& gout, const std::vector<Tensor*>& gin) {
                    if (!gin[0]) return;
                    const Tensor& av = t.value_by_id(ai);
                    const double g = 2.0 * gout[0];
                    for (std::size_t i = 0; i < av.size(); ++i) (*gin[0])[i] += g * av[i];
                });
}

Tape::Var Tape::mean_cross_entropy(Var logits, std::vector<int> targets) {
    const Tensor& lv = value(logits);
    check_rank2(lv, "mean_cross_entropy");
    const std::size_t rows = lv.dim(0), n = lv.dim(1);
    if (targets.size() != rows) throw DimensionError("mean_cross_entropy: one target per row required");
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < rows; ++i) {
        const int tgt = targets[i];
        if (tgt < 0) continue;
        if (static_cast<std::size_t>(tgt) >= n) throw IndexError("mean_cross_entropy: target out of range");
        const double* x = lv.data() + i * n;
        total += log_sum_exp(x, n) - x[tgt];
        ++count;
    }
    if (count == 0) throw ContractError("mean_cross_entropy: no scored rows");
    const auto li = logits.id;
    return push(Tensor::scalar(total / static_cast<double>(count)), {logits},
                [li, tg = std::move(targets), count, n](const Tape& t, const Tensor& gout,
                                                        const std::vector<Tensor*>& gin) {
                    if (!gin[0]) return;
                    const Tensor& lv = t.value_by_id(li);
                    const double w = gout[0] / static_cast<double>(count);
                    std::vector<double> p(n);
                    for (std::size_t i = 0; i < tg.size(); ++i) {
                        if (tg[i] < 0) continue;
                        softmax_row(lv.data() + i * n, p.data(), n);
                        double* dst = gin[0]->data() + i * n;
                        for (std::size_t j = 0; j < n; ++j) dst[j] += w * p[j];
                        dst[tg[i]] -= w;
                    }
                });
}

Tape::Var Tape::nll_row(Var logits, std::size_t row, int target) {
    const Tensor& lv = value(logits);
    check_rank2(lv, "nll_row");
    if (row >= lv.dim(0)) throw IndexError("nll_row: row out of range");
    const std::size_t n = lv.dim(1);
    if (target < 0 || static_cast<std::size_t>(target) >= n)
        throw IndexError("nll_row: target out of range");
    const double* x = lv.data() + row * n;
    const double nll = log_sum_exp(x, n) - x[target];
    const auto li = logits.id;
    return push(Tensor::scalar(nll), {logits},
                [li, row, target, n](const Tape& t, const Tensor& gout,
                                     const std::vector<Tensor*>& gin) {
                    if (!gin[0]) return;
                    const Tensor& lv = t.value_by_id(li);
                    std::vector<double> p(n);
                    softmax_row(lv.data() + row * n, p.data(), n);
                    double* dst = gin[0]->data() + row * n;
                    const double g = gout[0];
                    for (std::size_t j = 0; j < n; ++j) dst[j] += g * p[j];
                    dst[target] -= g;
                });
}

Tape::Var Tape::kl_row_to_ref(Var logits, std::size_t row, Tensor ref_logprobs) {
    const Tensor& lv = value(logits);
    check_rank2(lv, "kl_row_to_ref");
    if (row >= lv.dim(0)) throw IndexError("kl_row_to_ref: row out of range");
    const std::size_t n = lv.dim(1);
    if (ref_logprobs.size() != n) throw DimensionError("kl_row_to_ref: reference dimension mismatch");
    const double* x = lv.data() + row * n;
    const double lse = log_sum_exp(x, n);
    double kl = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const double lp = x[j] - lse;
        kl += std::exp(lp) * (lp - ref_logprobs[j]);
    }
    const auto li = logits.id;
    return push(Tensor::scalar(kl), {logits},
                [li, row, n, ref = std::move(ref_logprobs), kl](const Tape& t, const Tensor& gout,
                                                                const std::vector<Tensor*>& gin) {
                    if (!gin[0]) return;
                    const Tensor& lv = t.value_by_id(li);
                    const double* x = lv.data() + row * n;
                    const double lse = log_sum_exp(x, n);
                    double* dst = gin[0]->data() + row * n;
                    const double g = gout[0];
                    for (std::size_t j = 0; j < n; ++j) {
                        const double lp = x[j] - lse;
                        dst[j] += g * std::exp(lp) * (lp - ref[j] - kl);
                    }
                });
}

const Tensor& Tape::Gradients::of(Var v) const {
    if (v.id < grads_.size() && !grads_[v.id].empty()) return grads_[v.id];
    // untouched leaf: report zeros of the value shape
    zero_cache_.push_back(Tensor::zeros(tape_->value(v).shape()));
    return zero_cache_.back();
}

bool Tape::Gradients::reached(Var v) const {
    return v.id < grads_.size() && !grads_[v.id].empty();
}

Tape::Gradients Tape::backward(Var root) const {
    const Tensor& rv = value(root);
    if (!rv.is_scalar()) throw ContractError("backward: root must be a scalar");
    Gradients g;
    g.tape_ = this;
    g.grads_.resize(nodes_.size());
    if (!nodes_[root.id].relevant) return g;
    g.grads_[root.id] = Tensor::full(rv.shape(), 1.0);
    std::vector<Tensor*> gin;
    for (std::uint32_t id = root.id + 1; id-- > 0;) {
        const Node& node = nodes_[id];
        if (g.grads_[id].empty() || !node.back || !node.relevant) continue;
        gin.assign(node.in.size(), nullptr);
        for (std::size_t i = 0; i < node.in.size(); ++i) {
            const std::uint32_t src = node.in[i];
            if (!nodes_[src].relevant) continue;
            if (g.grads_[src].empty()) g.grads_[src] = Tensor::zeros(value_by_id(src).shape());
            gin[i] = &g.grads_[src];
        }
        node.back(*this, g.grads_[id], gin);
    }
    return g;
}

double finite_diff_check(const ScalarFn& f, const Tensor& x, double eps) {
    if (eps <= 0.0) throw ContractError("finite_diff_check: eps must be positive");
    Tensor analytic;
    {
        Tape tape;
        Tape::Var leaf = tape.leaf(&x, true);
        Tape::Var loss = f(tape, leaf);
        if (!tape.value(loss).is_scalar()) throw ContractError("finite_diff_check: f must be scalar");
        if (!std::isfinite(tape.value(loss).item()))
            throw NumericError("finite_diff_check: non-finite function value");
        analytic = tape.backward(loss).of(leaf);
    }
    auto eval = [&f](const Tensor& p) {
        Tape tape;
        Tape::Var leaf = tape.leaf(&p, false);
        const double v = tape.value(f(tape, leaf)).item();
        if (!std::isfinite(v)) throw NumericError("finite_diff_check: non-finite function value");
        return v;
    };
    Tensor probe = x;
    double max_rel = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        probe[i] = x[i] + eps;
        const double fp = eval(probe);
        probe[i] = x[i] - eps;
        const double fm = eval(probe);
        probe[i] = x[i];
        const double fd = (fp - fm) / (2.0 * eps);
        const double rel = std::fabs(analytic[i] - fd) / (std::fabs(analytic[i]) + 1e-12);
        max_rel = std::max(max_rel, rel);
    }
    return max_rel;
}

}  // namespace edlab
