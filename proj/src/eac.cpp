#include "edlab/eac.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "edlab/errors.hpp"
#include "edlab/rng.hpp"

namespace edlab {

const char* to_string(MaskStrategy s) {
    switch (s) {
        case MaskStrategy::WeightedGradient: return "weighted_gradient";
        case MaskStrategy::GradientOnly: return "gradient_only";
        case MaskStrategy::MagnitudeOnly: return "magnitude_only";
        case MaskStrategy::Random: return "random";
    }
    return "?";
}

MaskStrategy mask_strategy_from_string(const std::string& s) {
    if (s == "weighted_gradient") return MaskStrategy::WeightedGradient;
    if (s == "gradient_only") return MaskStrategy::GradientOnly;
    if (s == "magnitude_only") return MaskStrategy::MagnitudeOnly;
    if (s == "random") return MaskStrategy::Random;
    throw ConfigError("unknown mask strategy: " + s);
}

int SaliencyMask::popcount() const {
    int n = 0;
    for (std::uint8_t b : mask) n += b;
    return n;
}

void ElasticConfig::validate() const {
    if (lambda < 0.0 || mu < 0.0) throw ConfigError("elastic config: lambda and mu must be >= 0");
    if (epsilon <= 0.0) throw ConfigError("elastic config: epsilon must be > 0");
}

Tensor saliency_score(const Tensor& v_star, const Tensor& grad) {
    if (!v_star.same_shape(grad)) throw DimensionError("saliency_score: dimension mismatch");
    Tensor score = v_star;
    for (std::size_t i = 0; i < score.size(); ++i) score[i] *= grad[i];
    return score;
}

SaliencyMask build_mask(const Tensor& score, double percentile, MaskStrategy strategy,
                        std::uint64_t seed) {
    if (!(percentile > 0.0 && percentile < 1.0))
        throw ContractError("build_mask: percentile must lie in (0, 1)");
    const std::size_t d = score.size();
    if (d == 0) throw ContractError("build_mask: empty score");

    SaliencyMask out;
    out.score = score;
    out.percentile = percentile;
    out.strategy = strategy;
    out.mask.assign(d, 0);

    const auto keep = static_cast<std::size_t>(
        std::ceil((1.0 - percentile) * static_cast<double>(d)));

    if (strategy == MaskStrategy::Random) {
        // seeded choice of the same cardinality a threshold would keep
        std::vector<std::size_t> order(d);
        std::iota(order.begin(), order.end(), 0);
        Rng rng(seed);
        rng.shuffle(order);
        for (std::size_t i = 0; i < keep; ++i) out.mask[order[i]] = 1;
        out.gamma = 0.0;
        return out;
    }

    if (score.max_abs() == 0.0)
        throw DegenerateScoreError("build_mask: all-zero score with non-random strategy");

    // |score| descending, ties keep the lower index first
    std::vector<std::size_t> order(d);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&score](std::size_t a, std::size_t b) {
        return std::fabs(score[a]) > std::fabs(score[b]);
    });
    for (std::size_t i = 0; i < keep; ++i) out.mask[order[i]] = 1;
    out.gamma = std::fabs(score[order[keep - 1]]);
    return out;
}

Tensor elastic_alpha(const Tensor& score, double epsilon) {
    if (epsilon <= 0.0) throw ConfigError("elastic_alpha: epsilon must be > 0");
    Tensor alpha = Tensor::zeros(score.shape());
    for (std::size_t i = 0; i < alpha.size(); ++i)
        alpha[i] = 1.0 / (std::fabs(score[i]) + epsilon);
    return alpha;
}

double elastic_penalty(const Tensor& z, const Tensor& score, const ElasticConfig& cfg) {
    if (!z.same_shape(score)) throw DimensionError("elastic_penalty: dimension mismatch");
    cfg.validate();
    double weighted_l1 = 0.0;
    double l2sq = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        weighted_l1 += std::fabs(z[i]) / (std::fabs(score[i]) + cfg.epsilon);
        l2sq += z[i] * z[i];
    }
    return cfg.lambda * weighted_l1 + cfg.mu * l2sq;
}

}  // namespace edlab
