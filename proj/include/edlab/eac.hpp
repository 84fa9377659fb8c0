#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "edlab/tensor.hpp"

namespace edlab {

enum class MaskStrategy { WeightedGradient, GradientOnly, MagnitudeOnly, Random };

const char* to_string(MaskStrategy s);
MaskStrategy mask_strategy_from_string(const std::string& s);

// Hard-threshold anchor mask. For non-random strategies the kept set is the
// ceil((1-percentile)*d) largest |score| entries, ties broken toward lower
// indices; gamma is the smallest kept magnitude.
struct SaliencyMask {
    Tensor score;                    // strategy score the mask was built from
    std::vector<std::uint8_t> mask;  // 0/1 per dimension
    double gamma = 0.0;
    double percentile = 0.0;
    MaskStrategy strategy = MaskStrategy::WeightedGradient;

    int popcount() const;
};

struct ElasticConfig {
    double lambda = 0.0;
    double mu = 0.0;
    double epsilon = 1e-8;

    void validate() const;
};

// score = v* (.) grad
Tensor saliency_score(const Tensor& v_star, const Tensor& grad);

SaliencyMask build_mask(const Tensor& score, double percentile, MaskStrategy strategy,
                        std::uint64_t seed = 0);

// alpha_i = 1 / (|score_i| + epsilon)
Tensor elastic_alpha(const Tensor& score, double epsilon);

// lambda * sum_i alpha_i |z_i| + mu * sum_i z_i^2
double elastic_penalty(const Tensor& z, const Tensor& score, const ElasticConfig& cfg);

}  // namespace edlab
