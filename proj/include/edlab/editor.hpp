#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "edlab/eac.hpp"
#include "edlab/facts.hpp"
#include "edlab/model.hpp"
#include "edlab/tokenizer.hpp"

namespace edlab {

// One prompt realization: optional random-word prefix followed by the
// realized prompt, with the subject-final token position.
struct TokenContext {
    std::vector<int> tokens;
    int subject_index = 0;
};

struct EditContexts {
    std::vector<TokenContext> contexts;  // contexts[0] has the empty prefix
    int target_token = -1;
    std::vector<int> essence_tokens;
    int essence_subject_index = 0;
    Tensor essence_base_logprobs;  // next-token logprobs of the unedited model
};

struct KeyValuePlan {
    int layer = 0;
    Tensor k_star;  // d_mlp
    Tensor v_star;  // d_model, filled by value optimization
    Tensor c;       // d_mlp x d_mlp uncentered key second moment
    std::vector<double> loss_trace;
    Tensor grad_at_opt;  // gradient of the plain edit loss at v_star
    Tensor z_init;       // mlp value at the edit point before optimization
    EditContexts contexts;
};

struct ValueOptOptions {
    int steps = 20;
    double lr = 0.5;
    bool clip = true;
    double clip_norm = 5.0;
    double kl_weight = 0.0625;
};

struct ValueOptResult {
    Tensor v_star;
    std::vector<double> loss_trace;  // steps+1 entries, loss before each update then final
    Tensor grad_at_opt;
    int opt_steps = 0;
};

enum class EditMethod { Rome, RomeEac, MemitLite, MemitLiteEac, Ft, FtEn };

const char* to_string(EditMethod m);
EditMethod edit_method_from_string(const std::string& s);

struct EditParams {
    int layer = 2;
    std::vector<int> layers;  // MEMIT window; defaults to {layer, layer+1}
    ValueOptOptions value_opt;
    int n_prefixes = 8;  // total contexts including the empty prefix
    // EAC
    int anchor_steps = 10;
    int retrain_steps = 10;
    double percentile = 0.8;
    MaskStrategy strategy = MaskStrategy::WeightedGradient;
    ElasticConfig elastic;
    // FT
    int ft_steps = 25;
    double ft_lr = 0.05;
    // covariance estimation
    const std::vector<std::vector<int>>* cov_sentences = nullptr;
    int cov_windows = 96;
    int cov_window_len = 8;
    std::uint64_t seed = 1;
    std::string essence_template = "{} is a";
};

struct EditOutcome {
    std::string fact_id;
    std::string method;
    std::vector<int> edited_layers;
    double update_l1 = 0.0;           // entrywise L1 of the update, summed over layers
    std::vector<int> update_ranks;    // per edited layer
    std::vector<double> pre_l1;       // per edited layer, entrywise matrix L1
    std::vector<double> post_l1;
    bool success = false;             // post-edit argmax equals the target
    int opt_steps = 0;                // gradient update count spent
    double edit_ms = 0.0;
    std::vector<double> loss_trace;
};

// --- plan assembly -------------------------------------------------------

EditContexts build_contexts(const MicroLm& model, const Tokenizer& tok, const FactEdit& fact,
                            int n_prefixes, std::uint64_t seed,
                            const std::string& essence_template = "{} is a");

// k* averaged over the plan's contexts at the subject-final token
Tensor compute_key(const MicroLm& model, const EditContexts& contexts, int layer);
// spec convenience: seeded random prefixes
Tensor compute_key(const MicroLm& model, const Tokenizer& tok, const FactEdit& fact, int layer,
                   int n_prefixes, std::uint64_t seed = 1);
// explicit prefix strings ("" = empty)
Tensor compute_key_with_prefixes(const MicroLm& model, const Tokenizer& tok, const FactEdit& fact,
                                 int layer, const std::vector<std::string>& prefixes);

// C = (1/M) sum_i k_i k_i^T over every token position of every window
Tensor estimate_covariance(const MicroLm& model, const std::vector<std::vector<int>>& windows,
                           int layer);

KeyValuePlan make_plan(const MicroLm& model, const Tokenizer& tok, const FactEdit& fact, int layer,
                       const EditParams& params);

// --- value optimization --------------------------------------------------

struct DescentHooks {
    const std::vector<std::uint8_t>* mask = nullptr;  // gradient projected to the support
    const Tensor* alpha = nullptr;                    // weighted-L1 coefficients
    double lambda = 0.0;
    double mu = 0.0;
};

ValueOptResult descend_value(const MicroLm& model, int layer, const EditContexts& contexts,
                             const Tensor& z0, const ValueOptOptions& opts,
                             const DescentHooks& hooks = {});

// spec convenience over a fresh plan
ValueOptResult optimize_value(const MicroLm& model, const Tokenizer& tok, const FactEdit& fact,
                              int layer, const ValueOptOptions& opts, int n_prefixes = 8,
                              std::uint64_t seed = 1);

// --- closed-form insertion ------------------------------------------------

// W_hat = W + lambda_vec (C^-1 k*)^T with W_hat k* = v*; returns (W_hat, update)
std::pair<Tensor, Tensor> rank_one_update(const Tensor& w, const Tensor& k_star,
                                          const Tensor& v_star, const Tensor& c);

// --- EAC two-stage ops (primitives live in eac.hpp) ------------------------

// Retrains only the masked dimensions of v* under the elastic-net loss;
// off-support dimensions of the result are exactly zero.
ValueOptResult masked_retrain(const MicroLm& model, const KeyValuePlan& plan,
                              const SaliencyMask& mask, const ElasticConfig& cfg, int steps,
                              const ValueOptOptions& opts);

EditOutcome eac_edit(MicroLm& model, const Tokenizer& tok, const FactEdit& fact, int layer,
                     const EditParams& params);

// --- dispatcher ------------------------------------------------------------

EditOutcome apply_edit(MicroLm& model, const Tokenizer& tok, const FactEdit& fact,
                       EditMethod method, const EditParams& params);

EditOutcome fine_tune_edit(MicroLm& model, const Tokenizer& tok, const FactEdit& fact, int steps,
                           double lr, const std::optional<ElasticConfig>& elastic,
                           const EditParams& params);

}  // namespace edlab
