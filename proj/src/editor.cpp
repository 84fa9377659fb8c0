#include "edlab/editor.hpp"

#include <chrono>
#include <cmath>

#include "edlab/dataset.hpp"
#include "edlab/errors.hpp"
#include "edlab/parallel.hpp"
#include "edlab/kernels.hpp"
#include "edlab/linalg.hpp"
#include "edlab/rng.hpp"

namespace edlab {

const char* to_string(EditMethod m) {
    switch (m) {
        case EditMethod::Rome: return "rome";
        case EditMethod::RomeEac: return "rome-eac";
        case EditMethod::MemitLite: return "memit-lite";
        case EditMethod::MemitLiteEac: return "memit-lite-eac";
        case EditMethod::Ft: return "ft";
        case EditMethod::FtEn: return "ft-en";
    }
    return "?";
}

EditMethod edit_method_from_string(const std::string& s) {
    if (s == "rome") return EditMethod::Rome;
    if (s == "rome-eac") return EditMethod::RomeEac;
    if (s == "memit-lite") return EditMethod::MemitLite;
    if (s == "memit-lite-eac") return EditMethod::MemitLiteEac;
    if (s == "ft") return EditMethod::Ft;
    if (s == "ft-en") return EditMethod::FtEn;
    throw ConfigError("unknown edit method: " + s);
}

namespace {

std::uint64_t string_hash(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

// subject-final token index of `tpl` realized with `subject`
int subject_final_index(const Tokenizer& tok, const std::string& tpl, const std::string& subject,
                        std::vector<int>& full_tokens) {
    const std::size_t slot = tpl.find("{}");
    if (slot == std::string::npos) throw SpanError("prompt template has no subject slot");
    const std::string head = tpl.substr(0, slot) + subject;
    const std::vector<int> head_tokens = tok.encode(head);
    if (head_tokens.empty()) throw SpanError("subject tokenizes to nothing: " + subject);
    full_tokens = tok.encode(realize_template(tpl, subject));
    if (full_tokens.size() < head_tokens.size())
        throw SpanError("subject not found in tokenized prompt");
    for (std::size_t i = 0; i < head_tokens.size(); ++i) {
        if (full_tokens[i] != head_tokens[i])
            throw SpanError("subject not found in tokenized prompt");
    }
    return static_cast<int>(head_tokens.size()) - 1;
}

std::vector<int> random_prefix(const Tokenizer& tok, Rng& rng) {
    const int len = 2 + static_cast<int>(rng.below(3));
    const int vocab = tok.vocab_size();
    const int lo = vocab > 256 ? 256 : 0;  // prefer word tokens when present
    std::vector<int> prefix;
    prefix.reserve(static_cast<std::size_t>(len));
    for (int i = 0; i < len; ++i)
        prefix.push_back(lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(vocab - lo))));
    return prefix;
}

struct LossGrad {
    double loss = 0.0;
    Tensor grad;
};

// L(z): mean target NLL over contexts plus the essence-drift KL term.
LossGrad edit_loss_grad(const MicroLm& model, int layer, const EditContexts& ctxs, const Tensor& z,
                        double kl_weight, bool want_grad) {
    const std::size_t n_ctx = ctxs.contexts.size();
    std::vector<double> closs(n_ctx, 0.0);
    std::vector<Tensor> cgrad(n_ctx);

    parallel_for(n_ctx, [&](std::size_t i) {
        const TokenContext& ctx = ctxs.contexts[i];
        ForwardRun run = model.forward_substituted(ctx.tokens, layer, ctx.subject_index, z);
        Tape::Var nll =
            run.tape.nll_row(run.logits, ctx.tokens.size() - 1, ctxs.target_token);
        closs[i] = run.tape.value(nll).item();
        if (want_grad) {
            Tape::Gradients grads = run.tape.backward(nll);
            cgrad[i] = grads.of(run.z_var);
        }
    });

    LossGrad out;
    out.grad = Tensor::zeros(z.shape());
    const double inv = 1.0 / static_cast<double>(n_ctx);
    for (std::size_t i = 0; i < n_ctx; ++i) {
        out.loss += closs[i];
        if (want_grad) out.grad.add_scaled(cgrad[i], inv);
    }
    out.loss *= inv;

    if (kl_weight != 0.0) {
        ForwardRun run = model.forward_substituted(ctxs.essence_tokens, layer,
                                                   ctxs.essence_subject_index, z);
        Tape::Var kl = run.tape.kl_row_to_ref(run.logits, ctxs.essence_tokens.size() - 1,
                                              ctxs.essence_base_logprobs);
        out.loss += kl_weight * run.tape.value(kl).item();
        if (want_grad) {
            Tape::Gradients grads = run.tape.backward(kl);
            out.grad.add_scaled(grads.of(run.z_var), kl_weight);
        }
    }
    return out;
}

Tensor outer_product(const Tensor& col, const Tensor& row) {
    Tensor out = Tensor::zeros({col.size(), row.size()});
    for (std::size_t i = 0; i < col.size(); ++i)
        for (std::size_t j = 0; j < row.size(); ++j) out.at(i, j) = col[i] * row[j];
    return out;
}

Tensor matvec(const Tensor& m, const Tensor& v) {
    Tensor out = Tensor::zeros({m.dim(0)});
    kern::matmul(m.data(), v.data(), out.data(), m.dim(0), m.dim(1), 1);
    return out;
}

}  // namespace

EditContexts build_contexts(const MicroLm& model, const Tokenizer& tok, const FactEdit& fact,
                            int n_prefixes, std::uint64_t seed,
                            const std::string& essence_template) {
    if (n_prefixes < 1) throw ContractError("build_contexts: n_prefixes must be >= 1");
    fact.validate();

    EditContexts out;
    std::vector<int> prompt_tokens;
    const int sub_idx = subject_final_index(tok, fact.prompt_template, fact.subject, prompt_tokens);

    const std::vector<int> target = tok.encode(fact.target_object);
    if (target.size() != 1)
        throw DataError("edit target must be a single token: '" + fact.target_object + "'");
    out.target_token = target[0];

    out.contexts.push_back({prompt_tokens, sub_idx});
    Rng rng(Rng::mix(seed, string_hash(fact.id)));
    const int max_prefix = model.config().max_seq - static_cast<int>(prompt_tokens.size());
    for (int j = 1; j < n_prefixes; ++j) {
        std::vector<int> prefix = random_prefix(tok, rng);
        if (static_cast<int>(prefix.size()) > max_prefix)
            prefix.resize(static_cast<std::size_t>(std::max(0, max_prefix)));
        TokenContext ctx;
        ctx.tokens = prefix;
        ctx.tokens.insert(ctx.tokens.end(), prompt_tokens.begin(), prompt_tokens.end());
        ctx.subject_index = sub_idx + static_cast<int>(prefix.size());
        out.contexts.push_back(std::move(ctx));
    }

    out.essence_subject_index =
        subject_final_index(tok, essence_template, fact.subject, out.essence_tokens);
    out.essence_base_logprobs = model.next_logprobs(out.essence_tokens);
    return out;
}

Tensor compute_key(const MicroLm& model, const EditContexts& ctxs, int layer) {
    const std::size_t n_ctx = ctxs.contexts.size();
    std::vector<Tensor> keys(n_ctx);
    parallel_for(n_ctx, [&](std::size_t i) {
        TraceSpec spec{layer, ctxs.contexts[i].subject_index};
        ForwardRun run = model.forward_traced(ctxs.contexts[i].tokens, spec);
        keys[i] = std::move(run.capture.mlp_key);
    });
    Tensor k = Tensor::zeros(keys[0].shape());
    const double inv = 1.0 / static_cast<double>(n_ctx);
    for (const Tensor& ki : keys) k.add_scaled(ki, inv);
    return k;
}

Tensor compute_key(const MicroLm& model, const Tokenizer& tok, const FactEdit& fact, int layer,
                   int n_prefixes, std::uint64_t seed) {
    const EditContexts ctxs = build_contexts(model, tok, fact, n_prefixes, seed);
    return compute_key(model, ctxs, layer);
}

Tensor compute_key_with_prefixes(const MicroLm& model, const Tokenizer& tok, const FactEdit& fact,
                                 int layer, const std::vector<std::string>& prefixes) {
    if (prefixes.empty()) throw ContractError("compute_key_with_prefixes: no prefixes");
    EditContexts ctxs;
    std::vector<int> prompt_tokens;
    const int sub_idx = subject_final_index(tok, fact.prompt_template, fact.subject, prompt_tokens);
    for (const std::string& p : prefixes) {
        std::vector<int> tokens = tok.encode(p);
        const int shift = static_cast<int>(tokens.size());
        tokens.insert(tokens.end(), prompt_tokens.begin(), prompt_tokens.end());
        ctxs.contexts.push_back({std::move(tokens), sub_idx + shift});
    }
    return compute_key(model, ctxs, layer);
}

Tensor estimate_covariance(const MicroLm& model, const std::vector<std::vector<int>>& windows,
                           int layer) {
    if (windows.empty()) throw DataError("estimate_covariance: empty sample");
    const auto d = static_cast<std::size_t>(model.config().d_mlp);
    std::size_t total = 0;
    for (const auto& w : windows) total += w.size();

    Tensor keys = Tensor::zeros({total, d});
    std::vector<std::size_t> offsets(windows.size());
    std::size_t off = 0;
    for (std::size_t i = 0; i < windows.size(); ++i) {
        offsets[i] = off;
        off += windows[i].size();
    }
    parallel_for(windows.size(), [&](std::size_t i) {
        ForwardOptions opts;
        opts.capture_keys_layer = layer;
        ForwardRun run = model.forward(windows[i], opts);
        for (std::size_t r = 0; r < windows[i].size(); ++r) {
            for (std::size_t j = 0; j < d; ++j)
                keys.at(offsets[i] + r, j) = run.mlp_keys.at(r, j);
        }
    });

    Tensor c = Tensor::zeros({d, d});
    kern::accumulate_outer(c.data(), keys.data(), total, d);
    const double inv = 1.0 / static_cast<double>(total);
    for (std::size_t i = 0; i < d * d; ++i) c[i] *= inv;
    return c;
}

KeyValuePlan make_plan(const MicroLm& model, const Tokenizer& tok, const FactEdit& fact, int layer,
                       const EditParams& params) {
    if (layer < 0 || layer >= model.config().n_layers)
        throw IndexError("make_plan: layer out of range");
    if (params.cov_sentences == nullptr || params.cov_sentences->empty())
        throw ContractError("make_plan: covariance sample source required");

    KeyValuePlan plan;
    plan.layer = layer;
    plan.contexts = build_contexts(model, tok, fact, params.n_prefixes, params.seed,
                                   params.essence_template);
    plan.k_star = compute_key(model, plan.contexts, layer);

    const auto windows =
        sample_windows(*params.cov_sentences, params.cov_windows,
                                      params.cov_window_len,
                                      Rng::mix(params.seed, string_hash(fact.id) ^ 0xC0Cu));
    plan.c = estimate_covariance(model, windows, layer);

    const TokenContext& base = plan.contexts.contexts[0];
    TraceSpec spec{layer, base.subject_index};
    ForwardRun run = model.forward_traced(base.tokens, spec);
    plan.z_init = std::move(run.capture.mlp_value);
    return plan;
}

ValueOptResult descend_value(const MicroLm& model, int layer, const EditContexts& ctxs,
                             const Tensor& z0, const ValueOptOptions& opts,
                             const DescentHooks& hooks) {
    if (opts.steps < 0) throw ContractError("descend_value: negative step count");
    const bool elastic = hooks.lambda != 0.0 || hooks.mu != 0.0;
    if (elastic && hooks.alpha == nullptr)
        throw ContractError("descend_value: elastic hooks need alpha weights");

    Tensor z = z0;
    ValueOptResult out;

    auto penalty_at = [&](const Tensor& v) {
        if (!elastic) return 0.0;
        double p = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i)
            p += hooks.lambda * (*hooks.alpha)[i] * std::fabs(v[i]) + hooks.mu * v[i] * v[i];
        return p;
    };

    for (int step = 0; step < opts.steps; ++step) {
        LossGrad lg = edit_loss_grad(model, layer, ctxs, z, opts.kl_weight, true);
        double loss = lg.loss + penalty_at(z);
        if (!std::isfinite(loss))
            throw OptimizationError("descend_value: non-finite loss at step " +
                                    std::to_string(step));
        out.loss_trace.push_back(loss);

        Tensor g = std::move(lg.grad);
        if (elastic) {
            for (std::size_t i = 0; i < g.size(); ++i) {
                const double sign = z[i] > 0.0 ? 1.0 : (z[i] < 0.0 ? -1.0 : 0.0);
                g[i] += hooks.lambda * (*hooks.alpha)[i] * sign + 2.0 * hooks.mu * z[i];
            }
        }
        if (hooks.mask) {
            for (std::size_t i = 0; i < g.size(); ++i) {
                if (!(*hooks.mask)[i]) g[i] = 0.0;
            }
        }
        if (opts.clip) {
            const double norm = g.l2_norm();
            if (norm > opts.clip_norm && norm > 0.0) {
                const double s = opts.clip_norm / norm;
                for (std::size_t i = 0; i < g.size(); ++i) g[i] *= s;
            }
        }
        z.add_scaled(g, -opts.lr);
    }

    LossGrad fin = edit_loss_grad(model, layer, ctxs, z, opts.kl_weight, true);
    const double final_loss = fin.loss + penalty_at(z);
    if (!std::isfinite(final_loss))
        throw OptimizationError("descend_value: non-finite loss at final point");
    out.loss_trace.push_back(final_loss);
    out.v_star = std::move(z);
    out.grad_at_opt = std::move(fin.grad);
    out.opt_steps = opts.steps;
    return out;
}

ValueOptResult optimize_value(const MicroLm& model, const Tokenizer& tok, const FactEdit& fact,
                              int layer, const ValueOptOptions& opts, int n_prefixes,
                              std::uint64_t seed) {
    if (opts.steps < 1) throw ContractError("optimize_value: steps must be >= 1");
    const EditContexts ctxs = build_contexts(model, tok, fact, n_prefixes, seed);
    const TokenContext& base = ctxs.contexts[0];
    TraceSpec spec{layer, base.subject_index};
    ForwardRun run = model.forward_traced(base.tokens, spec);
    return descend_value(model, layer, ctxs, run.capture.mlp_value, opts);
}

std::pair<Tensor, Tensor> rank_one_update(const Tensor& w, const Tensor& k_star,
                                          const Tensor& v_star, const Tensor& c) {
    if (w.rank() != 2) throw DimensionError("rank_one_update: W must be rank 2");
    const std::size_t d_out = w.dim(0), d_in = w.dim(1);
    if (k_star.size() != d_in || v_star.size() != d_out || c.dim(0) != d_in || c.dim(1) != d_in)
        throw DimensionError("rank_one_update: dimension mismatch");

    const Tensor u = solve_linear(c, k_star);  // C^-1 k*
    const double denom = dot(u, k_star);
    if (std::fabs(denom) < 1e-12)
        throw DegenerateKeyError("rank_one_update: (C^-1 k*)^T k* is numerically zero");

    Tensor residual = v_star - matvec(w, k_star);
    const double inv = 1.0 / denom;
    for (std::size_t i = 0; i < residual.size(); ++i) residual[i] *= inv;  // Lambda

    Tensor update = outer_product(residual, u);
    Tensor w_hat = w;
    w_hat.add_scaled(update, 1.0);
    return {std::move(w_hat), std::move(update)};
}

namespace {

struct StageResult {
    Tensor v_final;
    std::vector<double> loss_trace;
    int opt_steps = 0;
};

// plain (ROME-style) or two-stage (EAC) value optimization
StageResult optimize_for_method(const MicroLm& model, const KeyValuePlan& plan,
                                const EditParams& params, bool eac, std::uint64_t mask_seed) {
    StageResult out;
    if (!eac) {
        ValueOptResult res =
            descend_value(model, plan.layer, plan.contexts, plan.z_init, params.value_opt);
        out.v_final = std::move(res.v_star);
        out.loss_trace = std::move(res.loss_trace);
        out.opt_steps = res.opt_steps;
        return out;
    }

    ValueOptOptions stage1 = params.value_opt;
    stage1.steps = params.anchor_steps;
    ValueOptResult anchors =
        descend_value(model, plan.layer, plan.contexts, plan.z_init, stage1);

    const Tensor score_eq1 = saliency_score(anchors.v_star, anchors.grad_at_opt);
    Tensor strategy_score;
    switch (params.strategy) {
        case MaskStrategy::GradientOnly: strategy_score = anchors.grad_at_opt; break;
        case MaskStrategy::MagnitudeOnly: strategy_score = anchors.v_star; break;
        default: strategy_score = score_eq1; break;
    }
    const SaliencyMask mask =
        build_mask(strategy_score, params.percentile, params.strategy, mask_seed);
    const Tensor alpha = elastic_alpha(score_eq1, params.elastic.epsilon);

    Tensor z1 = anchors.v_star;
    for (std::size_t i = 0; i < z1.size(); ++i) {
        if (!mask.mask[i]) z1[i] = 0.0;
    }

    ValueOptOptions stage2 = params.value_opt;
    stage2.steps = params.retrain_steps;
    DescentHooks hooks;
    hooks.mask = &mask.mask;
    hooks.alpha = &alpha;
    hooks.lambda = params.elastic.lambda;
    hooks.mu = params.elastic.mu;
    ValueOptResult retrained = descend_value(model, plan.layer, plan.contexts, z1, stage2, hooks);

    out.v_final = std::move(retrained.v_star);
    out.loss_trace = std::move(anchors.loss_trace);
    out.loss_trace.insert(out.loss_trace.end(), retrained.loss_trace.begin() + 1,
                          retrained.loss_trace.end());
    out.opt_steps = anchors.opt_steps + retrained.opt_steps;
    return out;
}

void record_layer_edit(EditOutcome& outcome, int layer, const Tensor& w_before,
                       const Tensor& w_after, const Tensor& update) {
    outcome.edited_layers.push_back(layer);
    outcome.pre_l1.push_back(w_before.l1_norm());
    outcome.post_l1.push_back(w_after.l1_norm());
    outcome.update_l1 += update.l1_norm();
    outcome.update_ranks.push_back(numerical_rank(update));
}

EditOutcome closed_form_edit(MicroLm& model, const Tokenizer& tok, const FactEdit& fact,
                             bool multi_layer, bool eac, const EditParams& params) {
    EditOutcome outcome;
    outcome.fact_id = fact.id;

    std::vector<int> window;
    if (multi_layer) {
        window = params.layers;
        if (window.empty()) window = {params.layer, params.layer + 1};
        for (int l : window) {
            if (l < 0 || l >= model.config().n_layers)
                throw IndexError("apply_edit: window layer out of range");
        }
        for (std::size_t i = 1; i < window.size(); ++i) {
            if (window[i] <= window[i - 1])
                throw ContractError("apply_edit: window layers must be strictly ascending");
        }
    } else {
        window = {params.layer};
    }
    const int value_layer = window.back();

    const KeyValuePlan plan = make_plan(model, tok, fact, value_layer, params);
    const std::uint64_t mask_seed =
        Rng::mix(params.seed, string_hash(fact.id) ^ 0xEACull);
    const StageResult stage = optimize_for_method(model, plan, params, eac, mask_seed);
    outcome.loss_trace = stage.loss_trace;
    outcome.opt_steps = stage.opt_steps;

    if (!multi_layer) {
        const Tensor& w = model.w_proj(value_layer);
        auto [w_hat, update] = rank_one_update(w, plan.k_star, stage.v_final, plan.c);
        record_layer_edit(outcome, value_layer, w, w_hat, update);
        model.w_proj_mut(value_layer) = std::move(w_hat);
    } else {
        // equal spread of the residual across the window; keys and covariance
        // are recomputed on the current weights after each layer write
        Tensor residual = stage.v_final - matvec(model.w_proj(value_layer), plan.k_star);
        const double share = 1.0 / static_cast<double>(window.size());
        const auto windows = sample_windows(
            *params.cov_sentences, params.cov_windows, params.cov_window_len,
            Rng::mix(params.seed, string_hash(fact.id) ^ 0xC0Cu));
        for (int l : window) {
            const Tensor k_l = compute_key(model, plan.contexts, l);
            const Tensor c_l = estimate_covariance(model, windows, l);
            const Tensor& w = model.w_proj(l);
            Tensor target = matvec(w, k_l);
            target.add_scaled(residual, share);
            auto [w_hat, update] = rank_one_update(w, k_l, target, c_l);
            record_layer_edit(outcome, l, w, w_hat, update);
            model.w_proj_mut(l) = std::move(w_hat);
        }
    }
    return outcome;
}

}  // namespace

ValueOptResult masked_retrain(const MicroLm& model, const KeyValuePlan& plan,
                              const SaliencyMask& mask, const ElasticConfig& cfg, int steps,
                              const ValueOptOptions& opts) {
    if (steps < 1) throw ContractError("masked_retrain: steps must be >= 1");
    if (plan.v_star.empty()) throw ContractError("masked_retrain: plan has no optimized v*");
    if (mask.mask.size() != plan.v_star.size())
        throw DimensionError("masked_retrain: mask dimension mismatch");
    if (mask.popcount() == 0) throw DegenerateMaskError("masked_retrain: empty mask");
    cfg.validate();

    const Tensor alpha = elastic_alpha(mask.score, cfg.epsilon);
    Tensor z1 = plan.v_star;
    for (std::size_t i = 0; i < z1.size(); ++i) {
        if (!mask.mask[i]) z1[i] = 0.0;
    }
    ValueOptOptions stage = opts;
    stage.steps = steps;
    DescentHooks hooks;
    hooks.mask = &mask.mask;
    hooks.alpha = &alpha;
    hooks.lambda = cfg.lambda;
    hooks.mu = cfg.mu;
    return descend_value(model, plan.layer, plan.contexts, z1, stage, hooks);
}

EditOutcome eac_edit(MicroLm& model, const Tokenizer& tok, const FactEdit& fact, int layer,
                     const EditParams& params) {
    EditParams p = params;
    p.layer = layer;
    return apply_edit(model, tok, fact, EditMethod::RomeEac, p);
}

EditOutcome apply_edit(MicroLm& model, const Tokenizer& tok, const FactEdit& fact,
                       EditMethod method, const EditParams& params) {
    const auto t0 = std::chrono::steady_clock::now();
    EditOutcome outcome;
    switch (method) {
        case EditMethod::Rome:
            outcome = closed_form_edit(model, tok, fact, false, false, params);
            break;
        case EditMethod::RomeEac:
            outcome = closed_form_edit(model, tok, fact, false, true, params);
            break;
        case EditMethod::MemitLite:
            outcome = closed_form_edit(model, tok, fact, true, false, params);
            break;
        case EditMethod::MemitLiteEac:
            outcome = closed_form_edit(model, tok, fact, true, true, params);
            break;
        case EditMethod::Ft:
            outcome = fine_tune_edit(model, tok, fact, params.ft_steps, params.ft_lr,
                                     std::nullopt, params);
            break;
        case EditMethod::FtEn:
            outcome = fine_tune_edit(model, tok, fact, params.ft_steps, params.ft_lr,
                                     params.elastic, params);
            break;
    }
    outcome.method = to_string(method);
    outcome.fact_id = fact.id;
    const std::vector<int> prompt_tokens = tok.encode(fact.prompt());
    const std::vector<int> target = tok.encode(fact.target_object);
    outcome.success = target.size() == 1 && model.argmax_next(prompt_tokens) == target[0];
    outcome.edit_ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
    return outcome;
}

EditOutcome fine_tune_edit(MicroLm& model, const Tokenizer& tok, const FactEdit& fact, int steps,
                           double lr, const std::optional<ElasticConfig>& elastic,
                           const EditParams& params) {
    if (steps < 1) throw ContractError("fine_tune_edit: steps must be >= 1");
    if (elastic) elastic->validate();
    fact.validate();

    const std::vector<int> prompt_tokens = tok.encode(fact.prompt());
    const std::vector<int> target = tok.encode(fact.target_object);
    if (target.size() != 1)
        throw DataError("edit target must be a single token: '" + fact.target_object + "'");

    EditOutcome outcome;
    outcome.fact_id = fact.id;
    const int layer = params.layer;
    const Tensor w0 = model.w_proj(layer);
    const double pre_l1 = w0.l1_norm();

    for (int step = 0; step < steps; ++step) {
        ForwardOptions opts;
        opts.grad_w_proj_layer = layer;
        ForwardRun run = model.forward(prompt_tokens, opts);
        Tape::Var nll = run.tape.nll_row(run.logits, prompt_tokens.size() - 1, target[0]);
        double loss = run.tape.value(nll).item();

        Tape::Var w_var;
        for (const auto& [name, var] : run.param_vars) w_var = var;
        Tape::Gradients grads = run.tape.backward(nll);
        Tensor g = grads.of(w_var);

        Tensor& w = model.w_proj_mut(layer);
        if (elastic) {
            Tensor delta = w - w0;
            // parameter-delta saliency, same weighted-gradient form as Eq. (1)
            Tensor score = delta;
            for (std::size_t i = 0; i < score.size(); ++i) score[i] *= g[i];
            loss += elastic_penalty(delta, score, *elastic);
            const Tensor alpha = elastic_alpha(score, elastic->epsilon);
            for (std::size_t i = 0; i < g.size(); ++i) {
                const double sign = delta[i] > 0.0 ? 1.0 : (delta[i] < 0.0 ? -1.0 : 0.0);
                g[i] += elastic->lambda * alpha[i] * sign + 2.0 * elastic->mu * delta[i];
            }
        }
        if (!std::isfinite(loss))
            throw OptimizationError("fine_tune_edit: non-finite loss at step " +
                                    std::to_string(step));
        outcome.loss_trace.push_back(loss);
        w.add_scaled(g, -lr);
    }

    const Tensor& w_now = model.w_proj(layer);
    Tensor update = w_now - w0;
    outcome.edited_layers.push_back(layer);
    outcome.pre_l1.push_back(pre_l1);
    outcome.post_l1.push_back(w_now.l1_norm());
    outcome.update_l1 = update.l1_norm();
    outcome.update_ranks.push_back(numerical_rank(update));
    outcome.opt_steps = steps;
    outcome.method = elastic ? "ft-en" : "ft";
    outcome.success = model.argmax_next(prompt_tokens) == target[0];
    return outcome;
}

}  // namespace edlab
