#pragma once

#include <cstdint>
#include <vector>

#include "edlab/model.hpp"

namespace edlab {

struct TrainOptions {
    int batch_size = 8;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 1;
};

struct TrainReport {
    std::vector<double> losses;  // mean batch cross-entropy per step
    double holdout_ce_before = 0.0;
    double holdout_ce_after = 0.0;
};

// Mean next-token cross-entropy over a sentence list, forward only.
double corpus_cross_entropy(const MicroLm& model, const std::vector<std::vector<int>>& sentences);

// Adam training on tokenized sentences. The holdout slice is never used for
// gradients, only for the before/after cross-entropy in the report; when
// empty the corpus itself is measured.
TrainReport train_toy(MicroLm& model, const std::vector<std::vector<int>>& corpus, int steps,
                      const TrainOptions& opts = {},
                      const std::vector<std::vector<int>>& holdout = {});

}  // namespace edlab
