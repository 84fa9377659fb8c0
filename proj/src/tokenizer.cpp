#include "edlab/tokenizer.hpp"

#include "edlab/errors.hpp"

namespace edlab {

Tokenizer::Tokenizer(std::vector<std::string> words) : words_(std::move(words)) {
    for (std::size_t i = 0; i < words_.size(); ++i) {
        const std::string& w = words_[i];
        if (w.empty()) throw ConfigError("tokenizer: empty word in vocabulary");
        if (w.find_first_of(" \t\n\r") != std::string::npos)
            throw ConfigError("tokenizer: word contains whitespace: '" + w + "'");
        if (!index_.emplace(w, 256 + static_cast<int>(i)).second)
            throw ConfigError("tokenizer: duplicate word: '" + w + "'");
    }
}

int Tokenizer::word_id(std::string_view word) const {
    const auto it = index_.find(std::string(word));
    return it == index_.end() ? -1 : it->second;
}

std::vector<int> Tokenizer::encode(std::string_view text) const {
    std::vector<int> ids;
    std::size_t pos = 0;
    while (pos < text.size()) {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
        if (pos >= text.size()) break;
        std::size_t end = pos;
        while (end < text.size() && !std::isspace(static_cast<unsigned char>(text[end]))) ++end;
        const std::string_view word = text.substr(pos, end - pos);
        const int id = word_id(word);
        if (id >= 0) {
            ids.push_back(id);
        } else {
            for (char c : word) ids.push_back(static_cast<unsigned char>(c));
        }
        pos = end;
    }
    return ids;
}

std::string Tokenizer::decode(std::span<const int> ids) const {
    std::string out;
    bool in_bytes = false;
    for (int id : ids) {
        if (id < 0 || id >= vocab_size()) throw IndexError("tokenizer: id out of range");
        if (id < 256) {
            if (!in_bytes && !out.empty()) out += ' ';
            out += static_cast<char>(id);
            in_bytes = true;
        } else {
            if (!out.empty()) out += ' ';
            out += words_[static_cast<std::size_t>(id - 256)];
            in_bytes = false;
        }
    }
    return out;
}

std::string Tokenizer::decode_token(int id) const {
    if (id < 0 || id >= vocab_size()) throw IndexError("tokenizer: id out of range");
    if (id < 256) return std::string(1, static_cast<char>(id));
    return words_[static_cast<std::size_t>(id - 256)];
}

}  // namespace edlab
