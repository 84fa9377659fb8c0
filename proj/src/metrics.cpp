#include "edlab/metrics.hpp"

#include <cmath>

#include "edlab/errors.hpp"
#include "edlab/parallel.hpp"

namespace edlab {

int argmax_next_token(const MicroLm& model, const Tokenizer& tok, const std::string& prompt) {
    const std::vector<int> tokens = tok.encode(prompt);
    if (tokens.empty()) throw ContractError("argmax_next_token: empty prompt");
    return model.argmax_next(tokens);
}

PredictionCache cache_predictions(const MicroLm& model, const Tokenizer& tok,
                                  std::span<const std::string> prompts) {
    PredictionCache cache;
    cache.model_fingerprint = model.fingerprint();
    std::vector<int> preds(prompts.size());
    parallel_for(prompts.size(), [&](std::size_t i) {
        preds[i] = argmax_next_token(model, tok, prompts[i]);
    });
    for (std::size_t i = 0; i < prompts.size(); ++i)
        cache.argmax_by_prompt.emplace(prompts[i], preds[i]);
    return cache;
}

PredictionCache cache_locality_predictions(const MicroLm& model, const Tokenizer& tok,
                                           std::span<const FactEdit> cases) {
    std::vector<std::string> prompts;
    for (const FactEdit& f : cases)
        for (const LocalityProbe& p : f.locality_probes) prompts.push_back(p.prompt);
    return cache_predictions(model, tok, prompts);
}

namespace {

int single_target_token(const Tokenizer& tok, const FactEdit& fact) {
    const std::vector<int> target = tok.encode(fact.target_object);
    if (target.size() != 1)
        throw DataError("metric target must be a single token: '" + fact.target_object + "'");
    return target[0];
}

}  // namespace

double reliability(const MicroLm& model, const Tokenizer& tok, std::span<const FactEdit> cases) {
    if (cases.empty()) throw ContractError("reliability: no cases");
    std::vector<int> hit(cases.size(), 0);
    parallel_for(cases.size(), [&](std::size_t i) {
        hit[i] = argmax_next_token(model, tok, cases[i].prompt()) ==
                         single_target_token(tok, cases[i])
                     ? 1
                     : 0;
    });
    int correct = 0;
    for (int h : hit) correct += h;
    return static_cast<double>(correct) / static_cast<double>(cases.size());
}

double generalization(const MicroLm& model, const Tokenizer& tok,
                      std::span<const FactEdit> cases) {
    if (cases.empty()) throw ContractError("generalization: no cases");
    struct Pair {
        const std::string* prompt;
        int target;
    };
    std::vector<Pair> pairs;
    for (const FactEdit& f : cases) {
        if (f.rephrases.empty())
            throw ContractError("generalization: case '" + f.id + "' has no rephrases");
        const int target = single_target_token(tok, f);
        for (const std::string& r : f.rephrases) pairs.push_back({&r, target});
    }
    std::vector<int> hit(pairs.size(), 0);
    parallel_for(pairs.size(), [&](std::size_t i) {
        hit[i] = argmax_next_token(model, tok, *pairs[i].prompt) == pairs[i].target ? 1 : 0;
    });
    int correct = 0;
    for (int h : hit) correct += h;
    return static_cast<double>(correct) / static_cast<double>(pairs.size());
}

double locality(const MicroLm& model_after, const Tokenizer& tok, std::span<const FactEdit> cases,
                const PredictionCache& pre_edit) {
    std::vector<const std::string*> prompts;
    for (const FactEdit& f : cases)
        for (const LocalityProbe& p : f.locality_probes) prompts.push_back(&p.prompt);
    if (prompts.empty()) throw ContractError("locality: no probes");
    std::vector<int> expected(prompts.size());
    for (std::size_t i = 0; i < prompts.size(); ++i) {
        const auto it = pre_edit.argmax_by_prompt.find(*prompts[i]);
        if (it == pre_edit.argmax_by_prompt.end())
            throw StalenessError("locality: probe missing from pre-edit cache: " + *prompts[i]);
        expected[i] = it->second;
    }
    std::vector<int> hit(prompts.size(), 0);
    parallel_for(prompts.size(), [&](std::size_t i) {
        hit[i] = argmax_next_token(model_after, tok, *prompts[i]) == expected[i] ? 1 : 0;
    });
    int kept = 0;
    for (int h : hit) kept += h;
    return static_cast<double>(kept) / static_cast<double>(prompts.size());
}

double locality(const MicroLm& model_after, const MicroLm& model_before, const Tokenizer& tok,
                std::span<const FactEdit> cases) {
    return locality(model_after, tok, cases, cache_locality_predictions(model_before, tok, cases));
}

std::pair<double, double> l1_deviation(const Tensor& w_now, const Tensor& w_base) {
    if (!w_now.same_shape(w_base)) throw DimensionError("l1_deviation: shape mismatch");
    double abs = 0.0;
    for (std::size_t i = 0; i < w_now.size(); ++i) abs += std::fabs(w_now[i] - w_base[i]);
    const double base = w_base.l1_norm();
    const double rel = base == 0.0 ? 0.0 : (w_now.l1_norm() - base) / base;
    return {abs, rel};
}

}  // namespace edlab
