#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "edlab/tape.hpp"
#include "edlab/tensor.hpp"

namespace edlab {

struct LmConfig {
    int vocab_size = 256;
    int d_model = 64;
    int n_layers = 4;
    int n_heads = 4;
    int d_mlp = 256;
    int max_seq = 32;
    std::uint64_t rng_seed = 1;

    void validate() const;  // throws ConfigError
};

// Pre-norm decoder block weights. w_proj (d_model x d_mlp) is the editable
// associative-memory matrix; the MLP carries no biases so the captured value
// satisfies v = w_proj * k exactly.
struct LayerWeights {
    Tensor ln1_g, ln1_b;
    Tensor wq, wk, wv, wo;  // each d_model x d_model, rows are output dims
    Tensor ln2_g, ln2_b;
    Tensor w_fc;    // d_mlp x d_model
    Tensor w_proj;  // d_model x d_mlp
};

struct TraceSpec {
    int layer = 0;
    int token_index = 0;
};

struct TraceCapture {
    Tensor mlp_key;    // d_mlp, post-GELU hidden of the MLP first layer
    Tensor mlp_value;  // d_model, w_proj * mlp_key
    Tensor hidden;     // d_model, residual stream after the traced layer
};

struct ForwardOptions {
    const TraceSpec* trace = nullptr;
    // substitution of the MLP output at (layer, token) by *z before the
    // residual addition; differentiable w.r.t. z
    int sub_layer = -1;
    int sub_token = -1;
    const Tensor* z = nullptr;
    bool params_require_grad = false;  // expose parameter vars for training
    int grad_w_proj_layer = -1;        // only this layer's w_proj requires grad
    int capture_keys_layer = -1;       // copy the full mlp key matrix at this layer
};

struct ForwardRun {
    Tape tape;
    Tape::Var logits;                // seq x vocab
    Tape::Var z_var;                 // valid when substituted
    TraceCapture capture;            // filled when traced
    bool traced = false;
    Tensor mlp_keys;                 // seq x d_mlp when capture_keys_layer set
    std::vector<std::pair<std::string, Tape::Var>> param_vars;  // when requested
};

class MicroLm {
public:
    static MicroLm init(const LmConfig& config);

    const LmConfig& config() const { return cfg_; }

    ForwardRun forward(std::span<const int> tokens, const ForwardOptions& opts = {}) const;

    // spec surface
    ForwardRun forward_traced(std::span<const int> tokens, const TraceSpec& trace) const;
    ForwardRun forward_substituted(std::span<const int> tokens, int layer, int token_index,
                                   const Tensor& z) const;

    // convenience: logits of the last position / greedy next token
    Tensor next_logits(std::span<const int> tokens) const;
    Tensor next_logprobs(std::span<const int> tokens) const;
    int argmax_next(std::span<const int> tokens) const;

    const Tensor& w_proj(int layer) const;
    Tensor& w_proj_mut(int layer);  // bumps revision
    const LayerWeights& layer(int i) const { return layers_[static_cast<std::size_t>(i)]; }

    // stable iteration order; used by training, checkpointing, fingerprint
    std::vector<std::pair<std::string, Tensor*>> named_params();
    std::vector<std::pair<std::string, const Tensor*>> named_params() const;

    std::uint64_t revision() const { return revision_; }
    std::uint64_t fingerprint() const;
    void bump_revision() { ++revision_; }

private:
    friend struct CheckpointIo;
    LmConfig cfg_;
    Tensor embed_, pos_, unembed_;
    Tensor lnf_g_, lnf_b_;
    std::vector<LayerWeights> layers_;
    std::uint64_t revision_ = 0;
};

inline MicroLm init_model(const LmConfig& config) { return MicroLm::init(config); }

}  // namespace edlab
