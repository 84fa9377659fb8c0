#include "edlab/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "edlab/checkpoint.hpp"
#include "edlab/config.hpp"
#include "edlab/drift.hpp"
#include "edlab/errors.hpp"
#include "edlab/rng.hpp"
#include "edlab/runner.hpp"
#include "edlab/svg.hpp"
#include "edlab/toylab.hpp"
#include "json.hpp"

namespace edlab {

namespace {

nlohmann::json outcome_to_json(const EditOutcome& o) {
    return {{"fact_id", o.fact_id},
            {"method", o.method},
            {"edited_layers", o.edited_layers},
            {"update_l1", o.update_l1},
            {"update_ranks", o.update_ranks},
            {"pre_l1", o.pre_l1},
            {"post_l1", o.post_l1},
            {"success", o.success},
            {"opt_steps", o.opt_steps},
            {"edit_ms", o.edit_ms},
            {"final_loss", o.loss_trace.empty() ? 0.0 : o.loss_trace.back()}};
}

struct TrainToyArgs {
    std::string out_dir = "out/toy";
    std::string preset = "default";
    int steps = -1;
    int n_facts = -1;
    std::uint64_t seed = 0;
    bool has_seed = false;
};

int cmd_train_toy(const TrainToyArgs& args) {
    ToyPreset preset = toy_preset(args.preset);
    if (args.steps >= 0) preset.train_steps = args.steps;
    if (args.n_facts > 0) preset.world.n_facts = args.n_facts;
    if (args.has_seed) {
        preset.world.seed = args.seed;
        preset.model.rng_seed = Rng::mix(args.seed, 0x11);
        preset.train.seed = Rng::mix(args.seed, 0x22);
    }

    std::cout << "building toy world (" << preset.world.n_facts << " facts)...\n";
    const ToyLab lab = build_toy_lab(preset);
    const double recall = fact_recall(lab.model, lab.tokenizer, lab.world);
    std::cout << "trained " << preset.train_steps
              << " steps: holdout CE " << lab.train_report.holdout_ce_before << " -> "
              << lab.train_report.holdout_ce_after << ", fact recall " << recall << "\n";

    std::filesystem::create_directories(args.out_dir);
    const std::string model_path = args.out_dir + "/model.ckpt";
    const std::string facts_path = args.out_dir + "/facts.json";
    save_checkpoint(lab.model, lab.tokenizer, model_path);
    save_facts(lab.world.facts, facts_path);
    {
        std::ofstream corpus(args.out_dir + "/corpus.txt", std::ios::trunc);
        for (const std::string& s : lab.world.train_sentences) corpus << s << '\n';
        std::ofstream holdout(args.out_dir + "/holdout.txt", std::ios::trunc);
        for (const std::string& s : lab.world.holdout_sentences) holdout << s << '\n';
    }
    {
        nlohmann::json log;
        log["holdout_ce_before"] = lab.train_report.holdout_ce_before;
        log["holdout_ce_after"] = lab.train_report.holdout_ce_after;
        log["fact_recall"] = recall;
        log["losses"] = lab.train_report.losses;
        std::ofstream f(args.out_dir + "/train_log.json", std::ios::trunc);
        f << log.dump(2) << '\n';
    }
    {
        ExperimentConfig example;
        example.model_path = model_path;
        example.facts_path = facts_path;
        example.corpus_path = args.out_dir + "/corpus.txt";
        example.method = EditMethod::Rome;
        example.n_edits = std::min(20, preset.world.n_facts);
        example.eval_every = 5;
        example.drift.prompts = preset.world.n_facts >= 10 ? 64 : 0;
        example.out_dir = args.out_dir + "/run";
        std::ofstream f(args.out_dir + "/config.example.json", std::ios::trunc);
        f << experiment_config_to_json(example) << '\n';
    }
    std::cout << "wrote " << model_path << ", " << facts_path << ", corpus.txt, "
              << "config.example.json\n";
    return 0;
}

struct EditArgs {
    std::string model_path;
    std::string facts_path;
    std::string fact_id;
    std::string method = "rome";
    int layer = 2;
    std::vector<int> layers;
    std::string save_path;
    std::uint64_t seed = 1;
};

int cmd_edit(const EditArgs& args) {
    auto [model, tok] = load_checkpoint(args.model_path);
    const std::vector<FactEdit> facts = load_facts(args.facts_path);
    const FactEdit* fact = nullptr;
    for (const FactEdit& f : facts) {
        if (f.id == args.fact_id) fact = &f;
    }
    if (!fact) throw DataError("edit: fact id not found: " + args.fact_id);

    std::vector<std::string> pool;
    for (const FactEdit& f : facts) {
        pool.push_back(f.prompt());
        for (const std::string& r : f.rephrases) pool.push_back(r);
    }
    const auto pool_tokens = tokenize_all(tok, pool);

    EditParams params;
    params.layer = args.layer;
    params.layers = args.layers;
    params.seed = args.seed;
    params.cov_sentences = &pool_tokens;
    const EditOutcome outcome =
        apply_edit(model, tok, *fact, edit_method_from_string(args.method), params);
    std::cout << outcome_to_json(outcome).dump(2) << '\n';
    if (!args.save_path.empty()) save_checkpoint(model, tok, args.save_path);
    return 0;
}

struct DriftArgs {
    std::string model_a;
    std::string model_b;
    std::string facts_path;
    int layer = 2;
    int prompts = 100;
    std::string out_path = "drift.json";
    std::string plot_path;
};

int cmd_drift(const DriftArgs& args) {
    auto [a, tok_a] = load_checkpoint(args.model_a);
    auto [b, tok_b] = load_checkpoint(args.model_b);
    if (tok_a.vocab_size() != tok_b.vocab_size())
        throw ConfigError("drift: checkpoints use different vocabularies");
    const std::vector<FactEdit> facts = load_facts(args.facts_path);
    std::vector<std::string> prompts;
    for (const FactEdit& f : facts) {
        prompts.push_back(f.prompt());
        if (static_cast<int>(prompts.size()) >= args.prompts) break;
    }
    for (const FactEdit& f : facts) {
        if (static_cast<int>(prompts.size()) >= args.prompts) break;
        for (const std::string& r : f.rephrases) {
            prompts.push_back(r);
            if (static_cast<int>(prompts.size()) >= args.prompts) break;
        }
    }
    const DriftReport report = fact_drift_pca(a, b, tok_a, prompts, args.layer);
    save_drift_report(report, args.out_path);
    if (!args.plot_path.empty()) {
        std::vector<double> flat(report.projections.data(),
                                 report.projections.data() + report.projections.size());
        write_scatter(args.plot_path, "fact drift PCA", flat, report.labels);
    }
    std::cout << "separation_accuracy " << report.separation_accuracy
              << (report.degenerate ? " (degenerate)" : "") << '\n';
    return 0;
}

int cmd_run(const std::string& config_path) {
    const ExperimentConfig config = load_experiment_config(config_path);
    const RunArtifacts art = run_sequential_full(config);
    emit_report_files(art, config.out_dir);
    if (!art.report.error.empty()) {
        std::cerr << "run truncated at step " << art.report.error_step << ": "
                  << art.report.error << '\n';
        std::cout << "partial report written to " << config.out_dir << '\n';
        return 1;
    }
    const MetricsRow& last = art.report.rows.back();
    std::cout << "final step " << last.step << ": reliability " << last.reliability
              << ", generalization " << last.generalization << ", locality " << last.locality
              << ", l1_dev_rel " << last.l1_dev_rel << '\n';
    std::cout << "report written to " << config.out_dir << '\n';
    return 0;
}

int cmd_ablate(const std::string& config_path) {
    const ExperimentConfig base = load_experiment_config(config_path);
    static const MaskStrategy strategies[] = {
        MaskStrategy::WeightedGradient, MaskStrategy::GradientOnly, MaskStrategy::MagnitudeOnly,
        MaskStrategy::Random};
    std::cout << "strategy            final_reliability  final_l1_dev_rel\n";
    for (MaskStrategy s : strategies) {
        ExperimentConfig config = base;
        config.method = config.method == EditMethod::MemitLiteEac ? EditMethod::MemitLiteEac
                                                                  : EditMethod::RomeEac;
        config.edit.strategy = s;
        config.out_dir = base.out_dir + "/" + to_string(s);
        const RunArtifacts art = run_sequential_full(config);
        emit_report_files(art, config.out_dir);
        if (!art.report.error.empty()) {
            std::cerr << to_string(s) << ": truncated at step " << art.report.error_step << '\n';
            continue;
        }
        const MetricsRow& last = art.report.rows.back();
        std::printf("%-19s %-18.4f %.4f\n", to_string(s), last.reliability, last.l1_dev_rel);
    }
    std::cout << "reports under " << base.out_dir << '\n';
    return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
    CLI::App app{"desk-scale sequential knowledge editing on a micro transformer"};
    app.require_subcommand(1);

    TrainToyArgs train_args;
    CLI::App* train = app.add_subcommand("train-toy", "build and persist a trained toy model");
    train->add_option("--out", train_args.out_dir, "output directory");
    train->add_option("--preset", train_args.preset, "default|tiny");
    train->add_option("--steps", train_args.steps, "training steps override");
    train->add_option("--facts", train_args.n_facts, "fact count override");
    train->add_option("--seed", train_args.seed, "world/model/train seed override")
        ->each([&train_args](const std::string&) { train_args.has_seed = true; });

    EditArgs edit_args;
    CLI::App* edit = app.add_subcommand("edit", "apply one edit and print the outcome");
    edit->add_option("--model", edit_args.model_path, "model checkpoint")->required();
    edit->add_option("--facts", edit_args.facts_path, "fact file")->required();
    edit->add_option("--id", edit_args.fact_id, "fact id")->required();
    edit->add_option("--method", edit_args.method,
                     "rome|rome-eac|memit-lite|memit-lite-eac|ft|ft-en");
    edit->add_option("--layer", edit_args.layer, "edited layer");
    edit->add_option("--layers", edit_args.layers, "multi-layer window");
    edit->add_option("--seed", edit_args.seed, "edit seed");
    edit->add_option("--save", edit_args.save_path, "save edited checkpoint here");

    std::string run_config;
    CLI::App* run = app.add_subcommand("run", "sequential editing experiment from a config");
    run->add_option("--config", run_config, "experiment config JSON")->required();

    DriftArgs drift_args;
    CLI::App* drift = app.add_subcommand("drift", "PCA fact drift between two checkpoints");
    drift->add_option("--model-a", drift_args.model_a, "baseline checkpoint")->required();
    drift->add_option("--model-b", drift_args.model_b, "edited checkpoint")->required();
    drift->add_option("--facts", drift_args.facts_path, "prompt source fact file")->required();
    drift->add_option("--layer", drift_args.layer, "trace layer");
    drift->add_option("--prompts", drift_args.prompts, "prompt count");
    drift->add_option("--out", drift_args.out_path, "drift report path");
    drift->add_option("--plot", drift_args.plot_path, "scatter SVG path");

    std::string ablate_config;
    CLI::App* ablate = app.add_subcommand("ablate", "anchor-strategy sweep over a base config");
    ablate->add_option("--config", ablate_config, "experiment config JSON")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (train->parsed()) return cmd_train_toy(train_args);
        if (edit->parsed()) return cmd_edit(edit_args);
        if (run->parsed()) return cmd_run(run_config);
        if (drift->parsed()) return cmd_drift(drift_args);
        if (ablate->parsed()) return cmd_ablate(ablate_config);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

}  // namespace edlab
