#pragma once

#include <cstdint>
#include <functional>
#include <list>
#include <vector>

#include "edlab/tensor.hpp"

namespace edlab {

// Reverse-mode tape. Nodes are appended in execution order (ids are
// topological); backward() walks them in reverse. Gradients are only
// propagated along paths that end in a grad-requiring leaf, so e.g. a loss
// differentiated w.r.t. a single substituted activation never touches the
// parameter branches.
//
// A tape is confined to one logical thread; tensors it references are
// immutable while it is alive.
class Tape {
public:
    struct Var {
        std::uint32_t id = kInvalid;
        bool valid() const { return id != kInvalid; }
        static constexpr std::uint32_t kInvalid = 0xffffffffu;
    };

    // gout: gradient w.r.t. this node's value. gin[i]: accumulator for input
    // i, or nullptr when that branch needs no gradient.
    using BackFn = std::function<void(const Tape&, const Tensor& gout,
                                      const std::vector<Tensor*>& gin)>;

    Var leaf(Tensor value, bool requires_grad = false);
    // Non-owning leaf; caller keeps *value alive for the tape's lifetime.
    Var leaf(const Tensor* value, bool requires_grad = false);

    const Tensor& value(Var v) const { return value_by_id(v.id); }
    const Tensor& value_by_id(std::uint32_t id) const;
    std::size_t node_count() const { return nodes_.size(); }

    // elementwise
    Var add(Var a, Var b);
    Var mul(Var a, Var b);
    Var scale(Var a, double s);

    // matrix products (see kernels.hpp for layouts)
    Var matmul(Var a, Var b);
    Var matmul_nt(Var a, Var b);
    Var matmul_tn(Var a, Var b);

    // structure
    Var gather_rows(Var m, std::vector<int> row_ids);
    Var slice_cols(Var a, std::size_t start, std::size_t len);
    Var concat_cols(const std::vector<Var>& parts);
    Var pick_row(Var a, std::size_t row);
    Var replace_row(Var a, std::size_t row, Var z);

    // nonlinearities / normalization
    Var gelu(Var a);
    Var layernorm(Var a, Var gain, Var bias);  // rowwise, eps 1e-5
    Var softmax_rows(Var a);
    Var causal_mask(Var scores);  // entries above the diagonal forced to -1e30

    // scalar reductions
    Var sum(Var a);
    Var sum_sq(Var a);
    // mean cross-entropy of row t predicting targets[t], rows with target < 0 skipped
    Var mean_cross_entropy(Var logits, std::vector<int> targets);
    Var nll_row(Var logits, std::size_t row, int target);
    // KL(softmax(logits[row]) || exp(ref_logprobs)), ref held constant
    Var kl_row_to_ref(Var logits, std::size_t row, Tensor ref_logprobs);

    // Gradients of every node reachable from `root` (a scalar). Leaves that
    // were never reached report zeros.
    class Gradients {
    public:
        const Tensor& of(Var v) const;
        bool reached(Var v) const;

    private:
        friend class Tape;
        std::vector<Tensor> grads_;
        mutable std::list<Tensor> zero_cache_;  // stable references
        const Tape* tape_ = nullptr;
    };

    Gradients backward(Var root) const;

private:
    struct Node {
        Tensor owned;
        const Tensor* ext = nullptr;
        std::vector<std::uint32_t> in;
        bool relevant = false;  // on a path to a grad-requiring leaf
        BackFn back;
    };

    Var push(Tensor value, const std::vector<Var>& inputs, BackFn back);

    std::vector<Node> nodes_;
};

// Max relative error between the tape gradient of `f` and central finite
// differences, max over coordinates of |analytic - fd| / (|analytic| + 1e-12).
using ScalarFn = std::function<Tape::Var(Tape&, Tape::Var)>;
double finite_diff_check(const ScalarFn& f, const Tensor& x, double eps);

}  // namespace edlab
