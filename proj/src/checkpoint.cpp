#include "edlab/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "edlab/errors.hpp"
#include "json.hpp"

namespace edlab {

namespace {

constexpr char kMagic[8] = {'E', 'D', 'L', 'M', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

nlohmann::json config_to_json(const LmConfig& c) {
    return {{"vocab_size", c.vocab_size}, {"d_model", c.d_model}, {"n_layers", c.n_layers},
            {"n_heads", c.n_heads},       {"d_mlp", c.d_mlp},     {"max_seq", c.max_seq},
            {"rng_seed", c.rng_seed}};
}

LmConfig config_from_json(const nlohmann::json& j) {
    LmConfig c;
    c.vocab_size = j.at("vocab_size").get<int>();
    c.d_model = j.at("d_model").get<int>();
    c.n_layers = j.at("n_layers").get<int>();
    c.n_heads = j.at("n_heads").get<int>();
    c.d_mlp = j.at("d_mlp").get<int>();
    c.max_seq = j.at("max_seq").get<int>();
    c.rng_seed = j.at("rng_seed").get<std::uint64_t>();
    return c;
}

}  // namespace

void save_checkpoint(const MicroLm& model, const Tokenizer& tokenizer, const std::string& path) {
    nlohmann::json header;
    header["format"] = "edlab.ckpt";
    header["format_version"] = kVersion;
    header["config"] = config_to_json(model.config());
    header["tokenizer_words"] = tokenizer.words();
    nlohmann::json index = nlohmann::json::array();
    const auto params = model.named_params();
    for (const auto& [name, tensor] : params) {
        index.push_back({{"name", name}, {"shape", tensor->shape()}});
    }
    header["tensors"] = index;
    const std::string head = header.dump();

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("checkpoint: cannot open for writing: " + path);
    out.write(kMagic, sizeof(kMagic));
    const std::uint32_t version = kVersion;
    out.write(reinterpret_cast<const char*>(&version), sizeof(version));
    const std::uint64_t head_len = head.size();
    out.write(reinterpret_cast<const char*>(&head_len), sizeof(head_len));
    out.write(head.data(), static_cast<std::streamsize>(head.size()));
    for (const auto& [name, tensor] : params) {
        out.write(reinterpret_cast<const char*>(tensor->data()),
                  static_cast<std::streamsize>(tensor->size() * sizeof(double)));
    }
    if (!out) throw IoError("checkpoint: write failed: " + path);
}

std::pair<MicroLm, Tokenizer> load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("checkpoint: cannot open: " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw ParseError("checkpoint: bad magic in " + path);
    std::uint32_t version = 0;
    in.read(reinterpret_cast<char*>(&version), sizeof(version));
    if (version != kVersion) throw ParseError("checkpoint: unsupported format version");
    std::uint64_t head_len = 0;
    in.read(reinterpret_cast<char*>(&head_len), sizeof(head_len));
    std::string head(head_len, '\0');
    in.read(head.data(), static_cast<std::streamsize>(head_len));
    if (!in) throw ParseError("checkpoint: truncated header");

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(head);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("checkpoint: header parse error: ") + e.what());
    }
    const LmConfig cfg = config_from_json(header.at("config"));
    Tokenizer tokenizer(header.at("tokenizer_words").get<std::vector<std::string>>());

    MicroLm model = MicroLm::init(cfg);
    auto params = model.named_params();
    const auto& index = header.at("tensors");
    if (index.size() != params.size()) throw ParseError("checkpoint: tensor count mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto& entry = index[i];
        if (entry.at("name").get<std::string>() != params[i].first)
            throw ParseError("checkpoint: tensor name mismatch at index " + std::to_string(i));
        const auto shape = entry.at("shape").get<std::vector<std::size_t>>();
        if (shape != params[i].second->shape())
            throw ParseError("checkpoint: tensor shape mismatch for " + params[i].first);
        in.read(reinterpret_cast<char*>(params[i].second->data()),
                static_cast<std::streamsize>(params[i].second->size() * sizeof(double)));
    }
    if (!in) throw ParseError("checkpoint: truncated tensor data");
    return {std::move(model), std::move(tokenizer)};
}

}  // namespace edlab
