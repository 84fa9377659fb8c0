#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "edlab/facts.hpp"
#include "edlab/model.hpp"
#include "edlab/tokenizer.hpp"

namespace edlab {

int argmax_next_token(const MicroLm& model, const Tokenizer& tok, const std::string& prompt);

// Greedy next-token predictions frozen from a model state; locality compares
// edited-model predictions against these.
struct PredictionCache {
    std::uint64_t model_fingerprint = 0;
    std::unordered_map<std::string, int> argmax_by_prompt;
};

PredictionCache cache_predictions(const MicroLm& model, const Tokenizer& tok,
                                  std::span<const std::string> prompts);
PredictionCache cache_locality_predictions(const MicroLm& model, const Tokenizer& tok,
                                           std::span<const FactEdit> cases);

// fraction of cases whose greedy continuation equals the edit target
double reliability(const MicroLm& model, const Tokenizer& tok, std::span<const FactEdit> cases);

// fraction over (case, rephrase) pairs answered with the edit target
double generalization(const MicroLm& model, const Tokenizer& tok, std::span<const FactEdit> cases);

// fraction of locality probes whose prediction matches the cached pre-edit
// prediction; probes missing from the cache raise StalenessError
double locality(const MicroLm& model_after, const Tokenizer& tok, std::span<const FactEdit> cases,
                const PredictionCache& pre_edit);
double locality(const MicroLm& model_after, const MicroLm& model_before, const Tokenizer& tok,
                std::span<const FactEdit> cases);

// (entrywise L1 of the difference, signed relative L1-norm change)
std::pair<double, double> l1_deviation(const Tensor& w_now, const Tensor& w_base);

}  // namespace edlab
