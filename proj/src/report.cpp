#include "edlab/report.hpp"

#include <filesystem>
#include <fstream>

#include "edlab/errors.hpp"
#include "edlab/svg.hpp"
#include "json.hpp"

namespace edlab {

DriftSummary summarize_drift(const DriftReport& full, int step) {
    DriftSummary s;
    s.step = step;
    s.layer = full.layer;
    s.n_prompts = full.n_prompts;
    s.degenerate = full.degenerate;
    s.separation_accuracy = full.separation_accuracy;
    s.labels = full.labels;
    s.projections.assign(full.projections.data(),
                         full.projections.data() + full.projections.size());
    return s;
}

void emit_table(const SequentialReport& report, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("report table: cannot open for writing: " + path);
    out << "step\treliability\tgeneralization\tlocality\tl1_dev_abs\tl1_dev_rel\tedit_ms\n";
    out.precision(12);
    for (const MetricsRow& r : report.rows) {
        out << r.step << '\t' << r.reliability << '\t' << r.generalization << '\t' << r.locality
            << '\t' << r.l1_dev_abs << '\t' << r.l1_dev_rel << '\t' << r.edit_ms << '\n';
    }
    if (!out) throw IoError("report table: write failed: " + path);
}

namespace {

nlohmann::json row_to_json(const MetricsRow& r) {
    return {{"step", r.step},
            {"reliability", r.reliability},
            {"generalization", r.generalization},
            {"locality", r.locality},
            {"l1_dev_abs", r.l1_dev_abs},
            {"l1_dev_rel", r.l1_dev_rel},
            {"edit_ms", r.edit_ms}};
}

MetricsRow row_from_json(const nlohmann::json& j) {
    MetricsRow r;
    r.step = j.at("step").get<int>();
    r.reliability = j.at("reliability").get<double>();
    r.generalization = j.at("generalization").get<double>();
    r.locality = j.at("locality").get<double>();
    r.l1_dev_abs = j.at("l1_dev_abs").get<double>();
    r.l1_dev_rel = j.at("l1_dev_rel").get<double>();
    r.edit_ms = j.at("edit_ms").get<double>();
    return r;
}

}  // namespace

void emit_record(const SequentialReport& report, const std::string& path) {
    nlohmann::json j;
    j["format"] = "edlab.sequential_report";
    j["format_version"] = report.format_version;
    j["config"] = report.config_json.empty() ? nlohmann::json()
                                             : nlohmann::json::parse(report.config_json);
    j["total_wall_ms"] = report.total_wall_ms;
    if (!report.error.empty()) {
        j["error"] = report.error;
        j["error_step"] = report.error_step;
    }
    nlohmann::json rows = nlohmann::json::array();
    for (const MetricsRow& r : report.rows) rows.push_back(row_to_json(r));
    j["rows"] = rows;
    nlohmann::json outs = nlohmann::json::array();
    for (const OutcomeSummary& o : report.outcomes) {
        outs.push_back({{"step", o.step},
                        {"fact_id", o.fact_id},
                        {"method", o.method},
                        {"success", o.success},
                        {"update_l1", o.update_l1},
                        {"opt_steps", o.opt_steps},
                        {"edit_ms", o.edit_ms}});
    }
    j["outcomes"] = outs;
    nlohmann::json drifts = nlohmann::json::array();
    for (const DriftSummary& d : report.drifts) {
        drifts.push_back({{"step", d.step},
                          {"layer", d.layer},
                          {"n_prompts", d.n_prompts},
                          {"degenerate", d.degenerate},
                          {"separation_accuracy", d.separation_accuracy},
                          {"projections", d.projections},
                          {"labels", d.labels}});
    }
    j["drifts"] = drifts;

    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("report record: cannot open for writing: " + path);
    out << j.dump(2) << '\n';
    if (!out) throw IoError("report record: write failed: " + path);
}

SequentialReport load_record(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("report record: cannot open: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("report record: " + path + ": " + e.what());
    }
    SequentialReport r;
    try {
        if (j.at("format").get<std::string>() != "edlab.sequential_report")
            throw ParseError("report record: unexpected format tag");
        r.format_version = j.at("format_version").get<int>();
        if (!j.at("config").is_null()) r.config_json = j.at("config").dump(2);
        r.total_wall_ms = j.value("total_wall_ms", 0.0);
        r.error = j.value("error", std::string());
        r.error_step = j.value("error_step", -1);
        for (const auto& row : j.at("rows")) r.rows.push_back(row_from_json(row));
        for (const auto& o : j.at("outcomes")) {
            OutcomeSummary s;
            s.step = o.at("step").get<int>();
            s.fact_id = o.at("fact_id").get<std::string>();
            s.method = o.at("method").get<std::string>();
            s.success = o.at("success").get<bool>();
            s.update_l1 = o.at("update_l1").get<double>();
            s.opt_steps = o.at("opt_steps").get<int>();
            s.edit_ms = o.at("edit_ms").get<double>();
            r.outcomes.push_back(std::move(s));
        }
        for (const auto& d : j.at("drifts")) {
            DriftSummary s;
            s.step = d.at("step").get<int>();
            s.layer = d.at("layer").get<int>();
            s.n_prompts = d.at("n_prompts").get<int>();
            s.degenerate = d.at("degenerate").get<bool>();
            s.separation_accuracy = d.at("separation_accuracy").get<double>();
            s.projections = d.at("projections").get<std::vector<double>>();
            s.labels = d.at("labels").get<std::vector<int>>();
            r.drifts.push_back(std::move(s));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("report record: " + path + ": " + e.what());
    }
    return r;
}

void emit_plots(const SequentialReport& report, const std::string& dir) {
    std::filesystem::create_directories(dir);
    std::vector<PlotSeries> metric_series(3);
    metric_series[0].name = "reliability";
    metric_series[1].name = "generalization";
    metric_series[2].name = "locality";
    PlotSeries dev_abs{"l1_dev_abs", {}};
    PlotSeries dev_rel{"l1_dev_rel", {}};
    for (const MetricsRow& r : report.rows) {
        const auto x = static_cast<double>(r.step);
        metric_series[0].points.emplace_back(x, r.reliability);
        metric_series[1].points.emplace_back(x, r.generalization);
        metric_series[2].points.emplace_back(x, r.locality);
        dev_abs.points.emplace_back(x, r.l1_dev_abs);
        dev_rel.points.emplace_back(x, r.l1_dev_rel);
    }
    write_line_chart(dir + "/metrics.svg", "editing metrics", "edits", "metric", metric_series);
    write_line_chart(dir + "/l1_deviation.svg", "edited-matrix L1 deviation", "edits",
                     "deviation", {dev_abs, dev_rel});
    if (!report.drifts.empty()) {
        const DriftSummary& d = report.drifts.back();
        write_scatter(dir + "/drift_pca.svg",
                      "fact drift PCA (step " + std::to_string(d.step) + ")", d.projections,
                      d.labels);
    }
}

}  // namespace edlab
