#pragma once

#include <string>
#include <vector>

#include "edlab/drift.hpp"

namespace edlab {

struct MetricsRow {
    int step = 0;
    double reliability = 0.0;
    double generalization = 0.0;
    double locality = 1.0;
    double l1_dev_abs = 0.0;
    double l1_dev_rel = 0.0;
    double edit_ms = 0.0;  // mean per edit since the previous row; informational
};

struct OutcomeSummary {
    int step = 0;
    std::string fact_id;
    std::string method;
    bool success = false;
    double update_l1 = 0.0;
    int opt_steps = 0;
    double edit_ms = 0.0;
};

struct DriftSummary {
    int step = 0;
    int layer = 0;
    int n_prompts = 0;
    bool degenerate = false;
    double separation_accuracy = 0.5;
    std::vector<double> projections;  // flattened n x 2
    std::vector<int> labels;
};

struct SequentialReport {
    int format_version = 1;
    std::string config_json;
    std::vector<MetricsRow> rows;
    std::vector<OutcomeSummary> outcomes;
    std::vector<DriftSummary> drifts;
    std::string error;   // set when the run was truncated by an edit failure
    int error_step = -1;
    double total_wall_ms = 0.0;
};

DriftSummary summarize_drift(const DriftReport& full, int step);

// Fixed-column TSV: step, reliability, generalization, locality, l1_dev_abs,
// l1_dev_rel, edit_ms.
void emit_table(const SequentialReport& report, const std::string& path);

void emit_record(const SequentialReport& report, const std::string& path);
SequentialReport load_record(const std::string& path);

// SVG curve plots plus a PCA scatter when a drift summary is present.
void emit_plots(const SequentialReport& report, const std::string& dir);

}  // namespace edlab
