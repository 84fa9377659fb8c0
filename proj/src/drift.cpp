#include "edlab/drift.hpp"

#include <cmath>
#include <fstream>

#include "edlab/errors.hpp"
#include "edlab/parallel.hpp"
#include "edlab/kernels.hpp"
#include "edlab/pca.hpp"
#include "json.hpp"

namespace edlab {

namespace {

Tensor collect_values(const MicroLm& model, const Tokenizer& tok,
                      const std::vector<std::string>& prompts, int layer) {
    const auto d = static_cast<std::size_t>(model.config().d_model);
    Tensor rows = Tensor::zeros({prompts.size(), d});
    parallel_for(prompts.size(), [&](std::size_t i) {
        const std::vector<int> tokens = tok.encode(prompts[i]);
        if (tokens.empty()) throw ContractError("fact_drift_pca: empty prompt");
        TraceSpec spec{layer, static_cast<int>(tokens.size()) - 1};
        ForwardRun run = model.forward_traced(tokens, spec);
        for (std::size_t j = 0; j < d; ++j) rows.at(i, j) = run.capture.mlp_value[j];
    });
    return rows;
}

}  // namespace

LogisticFit fit_logistic_2d(const Tensor& x, const std::vector<int>& labels, int steps,
                            double lr) {
    if (x.rank() != 2 || x.dim(1) != 2) throw DimensionError("fit_logistic_2d: n x 2 input required");
    if (labels.size() != x.dim(0)) throw DimensionError("fit_logistic_2d: label count mismatch");
    const std::size_t n = x.dim(0);

    LogisticFit fit;
    fit.steps = steps;
    const double inv_n = 1.0 / static_cast<double>(n);
    for (int step = 0; step < steps; ++step) {
        double g0 = 0.0, g1 = 0.0, gb = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double z = fit.w0 * x.at(i, 0) + fit.w1 * x.at(i, 1) + fit.bias;
            const double p = 1.0 / (1.0 + std::exp(-z));
            const double err = p - static_cast<double>(labels[i]);
            g0 += err * x.at(i, 0);
            g1 += err * x.at(i, 1);
            gb += err;
        }
        g0 *= inv_n;
        g1 *= inv_n;
        gb *= inv_n;
        fit.w0 -= lr * g0;
        fit.w1 -= lr * g1;
        fit.bias -= lr * gb;
        fit.final_grad_norm = std::sqrt(g0 * g0 + g1 * g1 + gb * gb);
    }
    return fit;
}

double logistic_accuracy(const LogisticFit& fit, const Tensor& x, const std::vector<int>& labels) {
    const std::size_t n = x.dim(0);
    if (labels.size() != n) throw DimensionError("logistic_accuracy: label count mismatch");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double z = fit.w0 * x.at(i, 0) + fit.w1 * x.at(i, 1) + fit.bias;
        const int pred = z > 0.0 ? 1 : 0;
        if (pred == labels[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(n);
}

DriftReport fact_drift_pca(const MicroLm& model_a, const MicroLm& model_b, const Tokenizer& tok,
                           const std::vector<std::string>& prompts, int layer,
                           bool pooled_components) {
    if (prompts.size() < 10) throw ContractError("fact_drift_pca: at least 10 prompts required");

    const Tensor rows_a = collect_values(model_a, tok, prompts, layer);
    const Tensor rows_b = collect_values(model_b, tok, prompts, layer);
    const std::size_t n = prompts.size();
    const std::size_t d = rows_a.dim(1);

    Tensor pooled = Tensor::zeros({2 * n, d});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            pooled.at(i, j) = rows_a.at(i, j);
            pooled.at(n + i, j) = rows_b.at(i, j);
        }

    DriftReport report;
    report.layer = layer;
    report.n_prompts = static_cast<int>(n);
    report.pooled_components = pooled_components;
    report.labels.assign(2 * n, 0);
    for (std::size_t i = 0; i < n; ++i) report.labels[n + i] = 1;

    Pca2d pca = pooled_components ? pca_2d(pooled) : pca_2d(rows_a);
    if (pca.degenerate) {
        report.degenerate = true;
        report.projections = Tensor::zeros({2 * n, 2});
        report.components = pca.components;
        return report;
    }
    report.components = pca.components;
    report.explained_variance = pca.explained_variance;

    if (pooled_components) {
        report.projections = pca.projections;
    } else {
        // center by the first model's column means, project both models
        report.projections = Tensor::zeros({2 * n, 2});
        std::vector<double> mean(d, 0.0);
        for (std::size_t j = 0; j < d; ++j) {
            for (std::size_t i = 0; i < n; ++i) mean[j] += rows_a.at(i, j);
            mean[j] /= static_cast<double>(n);
        }
        for (std::size_t i = 0; i < 2 * n; ++i) {
            for (int c = 0; c < 2; ++c) {
                double s = 0.0;
                for (std::size_t j = 0; j < d; ++j)
                    s += (pooled.at(i, j) - mean[j]) * report.components.at(c, j);
                report.projections.at(i, static_cast<std::size_t>(c)) = s;
            }
        }
    }

    const LogisticFit fit = fit_logistic_2d(report.projections, report.labels);
    const double acc = logistic_accuracy(fit, report.projections, report.labels);
    report.separation_accuracy = std::max(acc, 1.0 - acc);
    return report;
}

void save_drift_report(const DriftReport& report, const std::string& path) {
    nlohmann::json j;
    j["format_version"] = 1;
    j["layer"] = report.layer;
    j["n_prompts"] = report.n_prompts;
    j["pooled_components"] = report.pooled_components;
    j["degenerate"] = report.degenerate;
    j["separation_accuracy"] = report.separation_accuracy;
    j["explained_variance"] = report.explained_variance;
    j["labels"] = report.labels;
    nlohmann::json proj = nlohmann::json::array();
    for (std::size_t i = 0; i < report.projections.dim(0); ++i)
        proj.push_back({report.projections.at(i, 0), report.projections.at(i, 1)});
    j["projections"] = proj;
    nlohmann::json comps = nlohmann::json::array();
    for (std::size_t c = 0; c < report.components.dim(0); ++c) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t k = 0; k < report.components.dim(1); ++k)
            row.push_back(report.components.at(c, k));
        comps.push_back(row);
    }
    j["components"] = comps;
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("drift report: cannot open for writing: " + path);
    out << j.dump(2) << '\n';
}

}  // namespace edlab
