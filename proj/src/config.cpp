#include "edlab/config.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "edlab/errors.hpp"
#include "json.hpp"

namespace edlab {

void ExperimentConfig::validate() const {
    if (n_edits < 1) throw ConfigError("experiment config: n_edits must be >= 1");
    if (eval_every < 1) throw ConfigError("experiment config: eval_every must be >= 1");
    if (edit.n_prefixes < 1) throw ConfigError("experiment config: n_prefixes must be >= 1");
    if (!(edit.percentile > 0.0 && edit.percentile < 1.0))
        throw ConfigError("experiment config: percentile must lie in (0, 1)");
    edit.elastic.validate();
}

ElasticConfig elastic_preset(const std::string& name) {
    // the "paper-*" presets carry the published full-scale hyper-parameters;
    // "toy" is recalibrated for this model scale
    if (name == "paper-gpt2xl") return {5e-7, 5e-1, 1e-8};
    if (name == "paper-llama3") return {5e-7, 1e-3, 1e-8};
    if (name == "toy") return {1e-4, 1e-3, 1e-8};
    if (name == "off") return {0.0, 0.0, 1e-8};
    throw ConfigError("unknown elastic preset: " + name);
}

namespace {

ElasticConfig elastic_from_json(const nlohmann::json& j) {
    if (j.is_string()) return elastic_preset(j.get<std::string>());
    if (j.contains("preset")) return elastic_preset(j.at("preset").get<std::string>());
    ElasticConfig cfg;
    cfg.lambda = j.value("lambda", cfg.lambda);
    cfg.mu = j.value("mu", cfg.mu);
    cfg.epsilon = j.value("epsilon", cfg.epsilon);
    return cfg;
}

void require_exists(const std::string& path, const char* what) {
    if (!std::filesystem::exists(path))
        throw ConfigError(std::string("experiment config: ") + what + " does not exist: " + path);
}

}  // namespace

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("experiment config: cannot open: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("experiment config: " + path + ": " + e.what());
    }

    ExperimentConfig c;
    try {
        c.model_path = j.at("model").get<std::string>();
        c.facts_path = j.at("facts").get<std::string>();
        c.corpus_path = j.value("corpus", std::string());
        c.method = edit_method_from_string(j.value("method", std::string("rome")));
        c.n_edits = j.value("n_edits", c.n_edits);
        c.eval_every = j.value("eval_every", c.eval_every);
        c.out_dir = j.value("out_dir", c.out_dir);
        c.edit.seed = j.value("seed", c.edit.seed);
        c.edit.layer = j.value("layer", c.edit.layer);
        if (j.contains("layers")) c.edit.layers = j.at("layers").get<std::vector<int>>();
        c.edit.n_prefixes = j.value("n_prefixes", c.edit.n_prefixes);
        if (j.contains("value_opt")) {
            const auto& v = j.at("value_opt");
            c.edit.value_opt.steps = v.value("steps", c.edit.value_opt.steps);
            c.edit.value_opt.lr = v.value("lr", c.edit.value_opt.lr);
            c.edit.value_opt.clip = v.value("clip", c.edit.value_opt.clip);
            c.edit.value_opt.clip_norm = v.value("clip_norm", c.edit.value_opt.clip_norm);
            c.edit.value_opt.kl_weight = v.value("kl_weight", c.edit.value_opt.kl_weight);
        }
        if (j.contains("eac")) {
            const auto& e = j.at("eac");
            c.edit.percentile = e.value("percentile", c.edit.percentile);
            c.edit.anchor_steps = e.value("anchor_steps", c.edit.anchor_steps);
            c.edit.retrain_steps = e.value("retrain_steps", c.edit.retrain_steps);
            if (e.contains("strategy"))
                c.edit.strategy = mask_strategy_from_string(e.at("strategy").get<std::string>());
            if (e.contains("elastic")) c.edit.elastic = elastic_from_json(e.at("elastic"));
        }
        if (j.contains("ft")) {
            const auto& f = j.at("ft");
            c.edit.ft_steps = f.value("steps", c.edit.ft_steps);
            c.edit.ft_lr = f.value("lr", c.edit.ft_lr);
        }
        if (j.contains("covariance")) {
            const auto& v = j.at("covariance");
            c.edit.cov_windows = v.value("windows", c.edit.cov_windows);
            c.edit.cov_window_len = v.value("window_len", c.edit.cov_window_len);
        }
        if (j.contains("essence_template"))
            c.edit.essence_template = j.at("essence_template").get<std::string>();
        if (j.contains("drift")) {
            const auto& d = j.at("drift");
            c.drift.prompts = d.value("prompts", c.drift.prompts);
            c.drift.layer = d.value("layer", c.edit.layer);
            c.drift.at_end = d.value("at_end", c.drift.at_end);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("experiment config: " + path + ": " + e.what());
    }

    if (const char* env_out = std::getenv("EDLAB_OUT_DIR")) c.out_dir = env_out;

    require_exists(c.model_path, "model checkpoint");
    require_exists(c.facts_path, "fact file");
    if (!c.corpus_path.empty()) require_exists(c.corpus_path, "corpus file");
    c.validate();
    return c;
}

std::string experiment_config_to_json(const ExperimentConfig& c) {
    nlohmann::json j;
    j["format_version"] = 1;
    j["model"] = c.model_path;
    j["facts"] = c.facts_path;
    if (!c.corpus_path.empty()) j["corpus"] = c.corpus_path;
    j["method"] = to_string(c.method);
    j["n_edits"] = c.n_edits;
    j["eval_every"] = c.eval_every;
    j["out_dir"] = c.out_dir;
    j["seed"] = c.edit.seed;
    j["layer"] = c.edit.layer;
    if (!c.edit.layers.empty()) j["layers"] = c.edit.layers;
    j["n_prefixes"] = c.edit.n_prefixes;
    j["value_opt"] = {{"steps", c.edit.value_opt.steps},
                      {"lr", c.edit.value_opt.lr},
                      {"clip", c.edit.value_opt.clip},
                      {"clip_norm", c.edit.value_opt.clip_norm},
                      {"kl_weight", c.edit.value_opt.kl_weight}};
    j["eac"] = {{"percentile", c.edit.percentile},
                {"anchor_steps", c.edit.anchor_steps},
                {"retrain_steps", c.edit.retrain_steps},
                {"strategy", to_string(c.edit.strategy)},
                {"elastic",
                 {{"lambda", c.edit.elastic.lambda},
                  {"mu", c.edit.elastic.mu},
                  {"epsilon", c.edit.elastic.epsilon}}}};
    j["ft"] = {{"steps", c.edit.ft_steps}, {"lr", c.edit.ft_lr}};
    j["covariance"] = {{"windows", c.edit.cov_windows}, {"window_len", c.edit.cov_window_len}};
    j["essence_template"] = c.edit.essence_template;
    j["drift"] = {{"prompts", c.drift.prompts},
                  {"layer", c.drift.layer},
                  {"at_end", c.drift.at_end}};
    return j.dump(2);
}

}  // namespace edlab
