#include "edlab/runner.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>

#include "edlab/checkpoint.hpp"
#include "edlab/dataset.hpp"
#include "edlab/errors.hpp"
#include "edlab/metrics.hpp"
#include "edlab/rng.hpp"

namespace edlab {

namespace {

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("runner: cannot open corpus: " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) lines.push_back(line);
    }
    return lines;
}

std::vector<std::string> drift_prompt_pool(const std::vector<FactEdit>& facts, int wanted) {
    std::vector<std::string> prompts;
    for (const FactEdit& f : facts) {
        prompts.push_back(f.prompt());
        if (static_cast<int>(prompts.size()) >= wanted) return prompts;
    }
    for (const FactEdit& f : facts) {
        for (const std::string& r : f.rephrases) {
            prompts.push_back(r);
            if (static_cast<int>(prompts.size()) >= wanted) return prompts;
        }
    }
    for (const FactEdit& f : facts) {
        for (const LocalityProbe& p : f.locality_probes) {
            prompts.push_back(p.prompt);
            if (static_cast<int>(prompts.size()) >= wanted) return prompts;
        }
    }
    return prompts;
}

}  // namespace

RunArtifacts run_sequential_full(const ExperimentConfig& config) {
    config.validate();
    const auto t0 = std::chrono::steady_clock::now();

    auto [model, tok] = load_checkpoint(config.model_path);
    const MicroLm original = model;
    const std::vector<FactEdit> facts = load_facts(config.facts_path);
    if (static_cast<int>(facts.size()) < config.n_edits)
        throw ConfigError("runner: fact file has fewer records than n_edits");

    std::vector<std::string> pool_sentences;
    if (!config.corpus_path.empty()) {
        pool_sentences = read_lines(config.corpus_path);
    } else {
        for (const FactEdit& f : facts) {
            pool_sentences.push_back(f.prompt());
            for (const std::string& r : f.rephrases) pool_sentences.push_back(r);
            for (const LocalityProbe& p : f.locality_probes) pool_sentences.push_back(p.prompt);
        }
    }
    const std::vector<std::vector<int>> pool_tokens = tokenize_all(tok, pool_sentences);

    std::vector<int> watched_layers;
    if (config.method == EditMethod::MemitLite || config.method == EditMethod::MemitLiteEac) {
        watched_layers = config.edit.layers;
        if (watched_layers.empty())
            watched_layers = {config.edit.layer, config.edit.layer + 1};
    } else {
        watched_layers = {config.edit.layer};
    }
    std::vector<Tensor> base_w;
    double base_l1_total = 0.0;
    for (int l : watched_layers) {
        base_w.push_back(model.w_proj(l));
        base_l1_total += base_w.back().l1_norm();
    }

    const std::span<const FactEdit> all_facts(facts.data(), facts.size());
    const PredictionCache locality_cache = cache_locality_predictions(model, tok, all_facts);

    RunArtifacts art;
    SequentialReport& report = art.report;
    report.config_json = experiment_config_to_json(config);

    auto eval_row = [&](int step, double mean_ms) {
        const std::span<const FactEdit> so_far(facts.data(),
                                               static_cast<std::size_t>(std::max(step, 0)));
        MetricsRow row;
        row.step = step;
        const std::span<const FactEdit> scored = step == 0 ? all_facts : so_far;
        row.reliability = reliability(model, tok, scored);
        row.generalization = generalization(model, tok, scored);
        row.locality = locality(model, tok, scored, locality_cache);
        double dev_abs = 0.0;
        double now_l1_total = 0.0;
        for (std::size_t i = 0; i < watched_layers.size(); ++i) {
            const auto [a, r] = l1_deviation(model.w_proj(watched_layers[i]), base_w[i]);
            dev_abs += a;
            now_l1_total += model.w_proj(watched_layers[i]).l1_norm();
        }
        row.l1_dev_abs = dev_abs;
        row.l1_dev_rel = base_l1_total == 0.0 ? 0.0 : (now_l1_total - base_l1_total) / base_l1_total;
        row.edit_ms = mean_ms;
        report.rows.push_back(row);
    };

    auto eval_drift = [&](int step) {
        if (config.drift.prompts <= 0) return;
        const std::vector<std::string> prompts = drift_prompt_pool(facts, config.drift.prompts);
        DriftReport full = fact_drift_pca(original, model, tok, prompts, config.drift.layer);
        report.drifts.push_back(summarize_drift(full, step));
        art.drift_full.push_back(std::move(full));
    };

    eval_row(0, 0.0);

    double interval_ms = 0.0;
    int interval_edits = 0;
    for (int i = 1; i <= config.n_edits; ++i) {
        const FactEdit& fact = facts[static_cast<std::size_t>(i - 1)];
        EditParams params = config.edit;
        params.cov_sentences = &pool_tokens;
        params.seed = Rng::mix(config.edit.seed, static_cast<std::uint64_t>(i));
        try {
            const EditOutcome outcome = apply_edit(model, tok, fact, config.method, params);
            OutcomeSummary s;
            s.step = i;
            s.fact_id = outcome.fact_id;
            s.method = outcome.method;
            s.success = outcome.success;
            s.update_l1 = outcome.update_l1;
            s.opt_steps = outcome.opt_steps;
            s.edit_ms = outcome.edit_ms;
            report.outcomes.push_back(std::move(s));
            interval_ms += outcome.edit_ms;
            ++interval_edits;
        } catch (const std::exception& e) {
            report.error = e.what();
            report.error_step = i;
            break;
        }
        if (i % config.eval_every == 0 || i == config.n_edits) {
            eval_row(i, interval_edits ? interval_ms / interval_edits : 0.0);
            interval_ms = 0.0;
            interval_edits = 0;
            if (config.drift.prompts > 0 && (!config.drift.at_end || i == config.n_edits))
                eval_drift(i);
        }
    }

    report.total_wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return art;
}

SequentialReport run_sequential(const ExperimentConfig& config) {
    return run_sequential_full(config).report;
}

void emit_report_files(const RunArtifacts& artifacts, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    emit_record(artifacts.report, out_dir + "/report.json");
    emit_table(artifacts.report, out_dir + "/report.tsv");
    emit_plots(artifacts.report, out_dir);
    for (std::size_t i = 0; i < artifacts.drift_full.size(); ++i) {
        const int step = artifacts.report.drifts[i].step;
        save_drift_report(artifacts.drift_full[i],
                          out_dir + "/drift_step" + std::to_string(step) + ".json");
    }
}

}  // namespace edlab
