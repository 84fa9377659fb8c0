#include "edlab/model.hpp"

#include <cmath>

#include "edlab/errors.hpp"
#include "edlab/rng.hpp"

namespace edlab {

void LmConfig::validate() const {
    if (vocab_size < 1 || d_model < 1 || n_layers < 1 || n_heads < 1 || d_mlp < 1 || max_seq < 1)
        throw ConfigError("lm config: all dimensions must be >= 1");
    if (d_model % n_heads != 0)
        throw ConfigError("lm config: d_model must be divisible by n_heads");
    if (d_mlp < d_model) throw ConfigError("lm config: d_mlp must be >= d_model");
}

namespace {

Tensor init_matrix(std::size_t rows, std::size_t cols, double std, Rng& rng) {
    Tensor t = Tensor::zeros({rows, cols});
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = std * rng.normal();
    return t;
}

}  // namespace

MicroLm MicroLm::init(const LmConfig& config) {
    config.validate();
    MicroLm m;
    m.cfg_ = config;
    Rng rng(config.rng_seed);
    const auto v = static_cast<std::size_t>(config.vocab_size);
    const auto d = static_cast<std::size_t>(config.d_model);
    const auto dm = static_cast<std::size_t>(config.d_mlp);
    const auto s = static_cast<std::size_t>(config.max_seq);
    const double res_scale = 1.0 / std::sqrt(2.0 * config.n_layers);

    m.embed_ = init_matrix(v, d, 0.02, rng);
    m.pos_ = init_matrix(s, d, 0.01, rng);
    m.layers_.resize(static_cast<std::size_t>(config.n_layers));
    for (auto& lw : m.layers_) {
        lw.ln1_g = Tensor::full({d}, 1.0);
        lw.ln1_b = Tensor::zeros({d});
        lw.wq = init_matrix(d, d, 0.02, rng);
        lw.wk = init_matrix(d, d, 0.02, rng);
        lw.wv = init_matrix(d, d, 0.02, rng);
        lw.wo = init_matrix(d, d, 0.02 * res_scale, rng);
        lw.ln2_g = Tensor::full({d}, 1.0);
        lw.ln2_b = Tensor::zeros({d});
        lw.w_fc = init_matrix(dm, d, 0.02, rng);
        lw.w_proj = init_matrix(d, dm, 0.02 * res_scale, rng);
    }
    m.lnf_g_ = Tensor::full({d}, 1.0);
    m.lnf_b_ = Tensor::zeros({d});
    m.unembed_ = init_matrix(v, d, 0.02, rng);
    return m;
}

ForwardRun MicroLm::forward(std::span<const int> tokens, const ForwardOptions& opts) const {
    const int n = static_cast<int>(tokens.size());
    if (n == 0) throw ContractError("forward: empty token sequence");
    if (n > cfg_.max_seq) throw IndexError("forward: sequence longer than max_seq");
    for (int id : tokens) {
        if (id < 0 || id >= cfg_.vocab_size) throw IndexError("forward: token id out of range");
    }
    const bool sub = opts.sub_layer >= 0;
    if (sub) {
        if (opts.sub_layer >= cfg_.n_layers) throw IndexError("forward: substitution layer out of range");
        if (opts.sub_token < 0 || opts.sub_token >= n)
            throw IndexError("forward: substitution token out of range");
        if (opts.z == nullptr || opts.z->rank() != 1 ||
            opts.z->dim(0) != static_cast<std::size_t>(cfg_.d_model))
            throw DimensionError("forward: substitution vector must have length d_model");
    }
    if (opts.trace) {
        if (opts.trace->layer < 0 || opts.trace->layer >= cfg_.n_layers)
            throw IndexError("forward: trace layer out of range");
        if (opts.trace->token_index < 0 || opts.trace->token_index >= n)
            throw IndexError("forward: trace token out of range");
    }

    ForwardRun run;
    Tape& t = run.tape;
    const bool pg = opts.params_require_grad;
    auto reg = [&run, &t, pg](const std::string& name, const Tensor* tensor,
                              bool force_grad = false) {
        Tape::Var v = t.leaf(tensor, pg || force_grad);
        if (pg || force_grad) run.param_vars.emplace_back(name, v);
        return v;
    };

    std::vector<int> ids(tokens.begin(), tokens.end());
    std::vector<int> positions(tokens.size());
    for (int i = 0; i < n; ++i) positions[static_cast<std::size_t>(i)] = i;

    auto embed = reg("embed", &embed_);
    auto pos = reg("pos", &pos_);
    auto tok_emb = t.gather_rows(embed, ids);
    auto pos_emb = t.gather_rows(pos, positions);
    auto x = t.add(tok_emb, pos_emb);

    const int dh = cfg_.d_model / cfg_.n_heads;
    const double att_scale = 1.0 / std::sqrt(static_cast<double>(dh));

    for (int l = 0; l < cfg_.n_layers; ++l) {
        const LayerWeights& lw = layers_[static_cast<std::size_t>(l)];
        const std::string p = "layers." + std::to_string(l) + ".";

        // leaves created in statements of their own: node ids must not depend
        // on argument evaluation order
        auto ln1_g = reg(p + "ln1.g", &lw.ln1_g);
        auto ln1_b = reg(p + "ln1.b", &lw.ln1_b);
        auto wq = reg(p + "attn.wq", &lw.wq);
        auto wk = reg(p + "attn.wk", &lw.wk);
        auto wv = reg(p + "attn.wv", &lw.wv);
        auto wo = reg(p + "attn.wo", &lw.wo);
        auto ln2_g = reg(p + "ln2.g", &lw.ln2_g);
        auto ln2_b = reg(p + "ln2.b", &lw.ln2_b);
        auto w_fc = reg(p + "mlp.w_fc", &lw.w_fc);
        const bool ft_grad = opts.grad_w_proj_layer == l;
        auto w_proj = reg(p + "mlp.w_proj", &lw.w_proj, ft_grad);

        auto h1 = t.layernorm(x, ln1_g, ln1_b);
        auto q = t.matmul_nt(h1, wq);
        auto k = t.matmul_nt(h1, wk);
        auto v = t.matmul_nt(h1, wv);

        std::vector<Tape::Var> heads;
        heads.reserve(static_cast<std::size_t>(cfg_.n_heads));
        for (int h = 0; h < cfg_.n_heads; ++h) {
            const auto off = static_cast<std::size_t>(h * dh);
            auto qh = t.slice_cols(q, off, static_cast<std::size_t>(dh));
            auto kh = t.slice_cols(k, off, static_cast<std::size_t>(dh));
            auto vh = t.slice_cols(v, off, static_cast<std::size_t>(dh));
            auto scores = t.scale(t.matmul_nt(qh, kh), att_scale);
            auto probs = t.softmax_rows(t.causal_mask(scores));
            heads.push_back(t.matmul(probs, vh));
        }
        auto merged = t.concat_cols(heads);
        auto attn = t.matmul_nt(merged, wo);
        x = t.add(x, attn);

        auto h2 = t.layernorm(x, ln2_g, ln2_b);
        auto mlp_k = t.gelu(t.matmul_nt(h2, w_fc));
        auto mlp_v = t.matmul_nt(mlp_k, w_proj);

        if (opts.capture_keys_layer == l) run.mlp_keys = t.value(mlp_k);
        if (sub && opts.sub_layer == l) {
            run.z_var = t.leaf(opts.z, true);
            mlp_v = t.replace_row(mlp_v, static_cast<std::size_t>(opts.sub_token), run.z_var);
        }
        if (opts.trace && opts.trace->layer == l) {
            const auto row = static_cast<std::size_t>(opts.trace->token_index);
            run.capture.mlp_key = t.value(mlp_k).row(row);
            run.capture.mlp_value = t.value(mlp_v).row(row);
        }
        x = t.add(x, mlp_v);
        if (opts.trace && opts.trace->layer == l) {
            run.capture.hidden = t.value(x).row(static_cast<std::size_t>(opts.trace->token_index));
            run.traced = true;
        }
    }

    auto lnf_g = reg("ln_f.g", &lnf_g_);
    auto lnf_b = reg("ln_f.b", &lnf_b_);
    auto unembed = reg("unembed", &unembed_);
    auto xf = t.layernorm(x, lnf_g, lnf_b);
    run.logits = t.matmul_nt(xf, unembed);
    return run;
}

ForwardRun MicroLm::forward_traced(std::span<const int> tokens, const TraceSpec& trace) const {
    ForwardOptions opts;
    opts.trace = &trace;
    return forward(tokens, opts);
}

ForwardRun MicroLm::forward_substituted(std::span<const int> tokens, int layer, int token_index,
                                        const Tensor& z) const {
    ForwardOptions opts;
    opts.sub_layer = layer;
    opts.sub_token = token_index;
    opts.z = &z;
    return forward(tokens, opts);
}

Tensor MicroLm::next_logits(std::span<const int> tokens) const {
    const ForwardRun run = forward(tokens);
    const Tensor& lg = run.tape.value(run.logits);
    return lg.row(lg.dim(0) - 1);
}

Tensor MicroLm::next_logprobs(std::span<const int> tokens) const {
    Tensor row = next_logits(tokens);
    double m = row[0];
    for (std::size_t i = 1; i < row.size(); ++i) m = std::max(m, row[i]);
    double z = 0.0;
    for (std::size_t i = 0; i < row.size(); ++i) z += std::exp(row[i] - m);
    const double lse = m + std::log(z);
    for (std::size_t i = 0; i < row.size(); ++i) row[i] -= lse;
    return row;
}

int MicroLm::argmax_next(std::span<const int> tokens) const {
    const Tensor row = next_logits(tokens);
    std::size_t best = 0;
    for (std::size_t i = 1; i < row.size(); ++i) {
        if (row[i] > row[best]) best = i;
    }
    return static_cast<int>(best);
}

const Tensor& MicroLm::w_proj(int layer) const {
    if (layer < 0 || layer >= cfg_.n_layers) throw IndexError("w_proj: layer out of range");
    return layers_[static_cast<std::size_t>(layer)].w_proj;
}

Tensor& MicroLm::w_proj_mut(int layer) {
    if (layer < 0 || layer >= cfg_.n_layers) throw IndexError("w_proj: layer out of range");
    ++revision_;
    return layers_[static_cast<std::size_t>(layer)].w_proj;
}

std::vector<std::pair<std::string, Tensor*>> MicroLm::named_params() {
    std::vector<std::pair<std::string, Tensor*>> out;
    out.emplace_back("embed", &embed_);
    out.emplace_back("pos", &pos_);
    for (int l = 0; l < cfg_.n_layers; ++l) {
        LayerWeights& lw = layers_[static_cast<std::size_t>(l)];
        const std::string p = "layers." + std::to_string(l) + ".";
        out.emplace_back(p + "ln1.g", &lw.ln1_g);
        out.emplace_back(p + "ln1.b", &lw.ln1_b);
        out.emplace_back(p + "attn.wq", &lw.wq);
        out.emplace_back(p + "attn.wk", &lw.wk);
        out.emplace_back(p + "attn.wv", &lw.wv);
        out.emplace_back(p + "attn.wo", &lw.wo);
        out.emplace_back(p + "ln2.g", &lw.ln2_g);
        out.emplace_back(p + "ln2.b", &lw.ln2_b);
        out.emplace_back(p + "mlp.w_fc", &lw.w_fc);
        out.emplace_back(p + "mlp.w_proj", &lw.w_proj);
    }
    out.emplace_back("ln_f.g", &lnf_g_);
    out.emplace_back("ln_f.b", &lnf_b_);
    out.emplace_back("unembed", &unembed_);
    return out;
}

std::vector<std::pair<std::string, const Tensor*>> MicroLm::named_params() const {
    auto mut = const_cast<MicroLm*>(this)->named_params();
    std::vector<std::pair<std::string, const Tensor*>> out;
    out.reserve(mut.size());
    for (auto& [name, ptr] : mut) out.emplace_back(name, ptr);
    return out;
}

std::uint64_t MicroLm::fingerprint() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& [name, tensor] : named_params()) {
        for (char c : name) {
            h ^= static_cast<unsigned char>(c);
            h *= 0x100000001b3ULL;
        }
        h ^= tensor->checksum();
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace edlab
