#pragma once

#include <string>

#include "edlab/dataset.hpp"
#include "edlab/model.hpp"
#include "edlab/train.hpp"

namespace edlab {

struct ToyPreset {
    ToyWorldOptions world;
    LmConfig model;  // vocab_size is filled from the generated vocabulary
    int train_steps = 2000;
    TrainOptions train;
};

// "default": the 64-fact lab model; "tiny": a fast variant for tests.
ToyPreset toy_preset(const std::string& name);

struct ToyLab {
    ToyWorld world;
    Tokenizer tokenizer;
    MicroLm model;
    TrainReport train_report;
};

ToyLab build_toy_lab(const ToyPreset& preset);

// fraction of facts whose prompt continuation is the trained (true) object
double fact_recall(const MicroLm& model, const Tokenizer& tok, const ToyWorld& world);

}  // namespace edlab
