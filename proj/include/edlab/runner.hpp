#pragma once

#include <vector>

#include "edlab/config.hpp"
#include "edlab/report.hpp"

namespace edlab {

// Applies the configured edit stream in order. Checkpoint rows evaluate
// all-edits-so-far reliability/generalization, locality against the
// pre-editing model, and the L1 deviation of the edited matrices from their
// originals. An edit failure truncates the run and is recorded in the report.
SequentialReport run_sequential(const ExperimentConfig& config);

struct RunArtifacts {
    SequentialReport report;
    std::vector<DriftReport> drift_full;  // aligned with report.drifts
};

RunArtifacts run_sequential_full(const ExperimentConfig& config);

// Writes record + table + plots (and full drift reports) into out_dir.
void emit_report_files(const RunArtifacts& artifacts, const std::string& out_dir);

}  // namespace edlab
