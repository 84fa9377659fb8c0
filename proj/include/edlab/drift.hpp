#pragma once

#include <array>
#include <string>
#include <vector>

#include "edlab/model.hpp"
#include "edlab/tokenizer.hpp"

namespace edlab {

// Recalled-fact drift between two models: mlp values at the last prompt token
// are pooled, projected to 2-d by PCA, and scored by how well a logistic
// boundary separates the two models (0.5 = indistinguishable).
struct DriftReport {
    int layer = 0;
    int n_prompts = 0;
    bool pooled_components = true;
    Tensor projections;       // 2n x 2
    std::vector<int> labels;  // 0 = first model, 1 = second
    Tensor components;        // 2 x d_model
    std::array<double, 2> explained_variance{};
    double separation_accuracy = 0.5;
    bool degenerate = false;
};

DriftReport fact_drift_pca(const MicroLm& model_a, const MicroLm& model_b, const Tokenizer& tok,
                           const std::vector<std::string>& prompts, int layer,
                           bool pooled_components = true);

void save_drift_report(const DriftReport& report, const std::string& path);

// 2-feature logistic regression, full-batch gradient descent, zero init.
struct LogisticFit {
    double w0 = 0.0;
    double w1 = 0.0;
    double bias = 0.0;
    double final_grad_norm = 0.0;
    int steps = 0;
};

LogisticFit fit_logistic_2d(const Tensor& x, const std::vector<int>& labels, int steps = 500,
                            double lr = 0.1);
double logistic_accuracy(const LogisticFit& fit, const Tensor& x, const std::vector<int>& labels);

}  // namespace edlab
