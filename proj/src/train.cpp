#include "edlab/train.hpp"

#include <cmath>
#include <unordered_map>

#include "edlab/errors.hpp"
#include "edlab/parallel.hpp"
#include "edlab/rng.hpp"

namespace edlab {

namespace {

std::vector<int> next_token_targets(const std::vector<int>& sentence) {
    std::vector<int> targets(sentence.size(), -1);
    for (std::size_t t = 0; t + 1 < sentence.size(); ++t) targets[t] = sentence[t + 1];
    return targets;
}

}  // namespace

double corpus_cross_entropy(const MicroLm& model, const std::vector<std::vector<int>>& sentences) {
    if (sentences.empty()) throw DataError("corpus_cross_entropy: empty sentence list");
    double total = 0.0;
    std::size_t counted = 0;
    std::vector<double> losses(sentences.size(), 0.0);
    std::vector<char> scored(sentences.size(), 0);
    parallel_for(sentences.size(), [&](std::size_t i) {
        if (sentences[i].size() < 2) return;
        ForwardRun run = model.forward(sentences[i]);
        Tape::Var loss = run.tape.mean_cross_entropy(run.logits, next_token_targets(sentences[i]));
        losses[i] = run.tape.value(loss).item();
        scored[i] = 1;
    });
    for (std::size_t i = 0; i < sentences.size(); ++i) {
        if (scored[i]) {
            total += losses[i];
            ++counted;
        }
    }
    if (counted == 0) throw DataError("corpus_cross_entropy: no sentence has length >= 2");
    return total / static_cast<double>(counted);
}

TrainReport train_toy(MicroLm& model, const std::vector<std::vector<int>>& corpus, int steps,
                      const TrainOptions& opts, const std::vector<std::vector<int>>& holdout) {
    if (corpus.empty()) throw DataError("train_toy: empty corpus");
    for (const auto& s : corpus) {
        if (s.size() < 2) throw DataError("train_toy: sentences need at least 2 tokens");
    }
    if (steps < 0) throw ContractError("train_toy: negative step count");

    const auto& eval_set = holdout.empty() ? corpus : holdout;
    TrainReport report;
    report.holdout_ce_before = corpus_cross_entropy(model, eval_set);

    auto params = model.named_params();
    const std::size_t n_params = params.size();
    std::vector<Tensor> m_state(n_params), v_state(n_params);
    std::unordered_map<std::string, std::size_t> slot_of;
    for (std::size_t p = 0; p < n_params; ++p) {
        m_state[p] = Tensor::zeros(params[p].second->shape());
        v_state[p] = Tensor::zeros(params[p].second->shape());
        slot_of.emplace(params[p].first, p);
    }

    Rng rng(opts.seed);
    const int batch = std::max(1, opts.batch_size);
    std::vector<std::size_t> picks(static_cast<std::size_t>(batch));
    std::vector<double> item_loss(static_cast<std::size_t>(batch));
    std::vector<std::vector<Tensor>> item_grads(static_cast<std::size_t>(batch));

    for (int step = 0; step < steps; ++step) {
        for (int b = 0; b < batch; ++b) picks[static_cast<std::size_t>(b)] = rng.below(corpus.size());

        // Independent forward/backward per batch item; accumulation below is
        // in fixed batch order, so results do not depend on thread count.
        parallel_for(static_cast<std::size_t>(batch), [&](std::size_t b) {
            const std::vector<int>& sentence = corpus[picks[b]];
            ForwardOptions fopts;
            fopts.params_require_grad = true;
            ForwardRun run = model.forward(sentence, fopts);
            Tape::Var loss = run.tape.mean_cross_entropy(run.logits, next_token_targets(sentence));
            item_loss[b] = run.tape.value(loss).item();
            Tape::Gradients grads = run.tape.backward(loss);
            auto& slot = item_grads[b];
            slot.assign(n_params, Tensor());
            for (const auto& [name, var] : run.param_vars)
                slot[slot_of.at(name)] = grads.of(var);
        });

        double batch_loss = 0.0;
        for (int b = 0; b < batch; ++b) batch_loss += item_loss[static_cast<std::size_t>(b)];
        batch_loss /= static_cast<double>(batch);
        if (!std::isfinite(batch_loss))
            throw TrainingError("train_toy: non-finite loss at step " + std::to_string(step));
        report.losses.push_back(batch_loss);

        const double t = static_cast<double>(step + 1);
        const double bc1 = 1.0 - std::pow(opts.beta1, t);
        const double bc2 = 1.0 - std::pow(opts.beta2, t);
        const double inv_batch = 1.0 / static_cast<double>(batch);
        for (std::size_t p = 0; p < n_params; ++p) {
            Tensor& theta = *params[p].second;
            Tensor& m = m_state[p];
            Tensor& v = v_state[p];
            for (std::size_t i = 0; i < theta.size(); ++i) {
                double g = 0.0;
                for (int b = 0; b < batch; ++b) g += item_grads[static_cast<std::size_t>(b)][p][i];
                g *= inv_batch;
                m[i] = opts.beta1 * m[i] + (1.0 - opts.beta1) * g;
                v[i] = opts.beta2 * v[i] + (1.0 - opts.beta2) * g * g;
                theta[i] -= opts.lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + opts.adam_eps);
            }
        }
    }
    model.bump_revision();

    report.holdout_ce_after = corpus_cross_entropy(model, eval_set);
    return report;
}

}  // namespace edlab
