#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "edlab/facts.hpp"
#include "edlab/tokenizer.hpp"

namespace edlab {

struct ToyWorldOptions {
    int n_facts = 64;
    int n_probe_subjects = 32;
    std::uint64_t seed = 1234;
};

// Synthetic subject-relation-object world. Every fact is an editing request
// whose target differs from the trained object; train sentences carry the
// true objects.
struct ToyWorld {
    std::vector<std::string> vocabulary;         // word list for the Tokenizer
    std::vector<FactEdit> facts;                 // counterfactual edit requests
    std::vector<std::string> true_objects;       // aligned with facts
    std::vector<std::string> train_sentences;
    std::vector<std::string> holdout_sentences;  // rephrase realizations kept out of training
    std::vector<std::string> drift_prompts;
};

ToyWorld make_toy_world(const ToyWorldOptions& opts = {});

std::vector<std::vector<int>> tokenize_all(const Tokenizer& tok,
                                           const std::vector<std::string>& sentences);

// Covariance sampling helper: token windows drawn from the sentence pool.
std::vector<std::vector<int>> sample_windows(const std::vector<std::vector<int>>& sentences,
                                             int n_windows, int window_len, std::uint64_t seed);

}  // namespace edlab
