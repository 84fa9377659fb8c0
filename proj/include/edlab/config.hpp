#pragma once

#include <string>

#include "edlab/editor.hpp"

namespace edlab {

struct DriftConfig {
    int prompts = 0;  // 0 disables drift evaluation
    int layer = 2;
    bool at_end = true;
};

struct ExperimentConfig {
    std::string model_path;
    std::string facts_path;
    std::string corpus_path;  // optional window pool; fact prompts otherwise
    EditMethod method = EditMethod::Rome;
    EditParams edit;  // cov_sentences is filled by the runner, not the file
    int n_edits = 20;
    int eval_every = 5;
    DriftConfig drift;
    std::string out_dir = "out";

    void validate() const;
};

// Named elastic presets accepted by config files.
ElasticConfig elastic_preset(const std::string& name);

// JSON config file; referenced paths must exist. EDLAB_OUT_DIR overrides
// out_dir when set.
ExperimentConfig load_experiment_config(const std::string& path);
std::string experiment_config_to_json(const ExperimentConfig& config);

}  // namespace edlab
