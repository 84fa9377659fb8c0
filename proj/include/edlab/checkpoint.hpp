#pragma once

#include <string>
#include <utility>

#include "edlab/model.hpp"
#include "edlab/tokenizer.hpp"

namespace edlab {

// Self-describing binary container: magic + format version, a JSON header
// (config, tokenizer words, tensor index), then raw little-endian f64 data.
// load(save(m)) is bit-exact.
void save_checkpoint(const MicroLm& model, const Tokenizer& tokenizer, const std::string& path);
std::pair<MicroLm, Tokenizer> load_checkpoint(const std::string& path);

}  // namespace edlab
