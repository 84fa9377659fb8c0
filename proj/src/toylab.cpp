#include "edlab/toylab.hpp"

#include "edlab/errors.hpp"
#include "edlab/metrics.hpp"

namespace edlab {

ToyPreset toy_preset(const std::string& name) {
    ToyPreset p;
    if (name == "default") {
        p.world = {64, 32, 1234};
        p.model = {0, 64, 4, 4, 256, 24, 7};
        p.train_steps = 2000;
        p.train = {8, 1e-3, 0.9, 0.999, 1e-8, 99};
        return p;
    }
    if (name == "tiny") {
        p.world = {12, 6, 4321};
        p.model = {0, 32, 2, 2, 64, 24, 7};
        p.train_steps = 500;
        p.train = {8, 2e-3, 0.9, 0.999, 1e-8, 99};
        return p;
    }
    throw ConfigError("unknown toy preset: " + name);
}

ToyLab build_toy_lab(const ToyPreset& preset) {
    ToyLab lab;
    lab.world = make_toy_world(preset.world);
    lab.tokenizer = Tokenizer(lab.world.vocabulary);
    LmConfig cfg = preset.model;
    cfg.vocab_size = lab.tokenizer.vocab_size();
    lab.model = MicroLm::init(cfg);
    const auto train = tokenize_all(lab.tokenizer, lab.world.train_sentences);
    const auto holdout = tokenize_all(lab.tokenizer, lab.world.holdout_sentences);
    lab.train_report = train_toy(lab.model, train, preset.train_steps, preset.train, holdout);
    return lab;
}

double fact_recall(const MicroLm& model, const Tokenizer& tok, const ToyWorld& world) {
    if (world.facts.empty()) throw ContractError("fact_recall: empty world");
    int hits = 0;
    for (std::size_t i = 0; i < world.facts.size(); ++i) {
        const int want = tok.word_id(world.true_objects[i]);
        if (want >= 0 && argmax_next_token(model, tok, world.facts[i].prompt()) == want) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(world.facts.size());
}

}  // namespace edlab
