#pragma once

#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace edlab {

// Whitespace tokenizer over a fixed word list with byte fallback.
// Ids 0..255 are raw bytes; ids 256.. are words. Unknown words encode as
// their bytes; decode merges consecutive byte tokens back into one word and
// joins words with single spaces, so encode/decode round-trips any
// single-spaced text.
class Tokenizer {
public:
    Tokenizer() = default;  // byte-only, vocab 256
    explicit Tokenizer(std::vector<std::string> words);

    int vocab_size() const { return 256 + static_cast<int>(words_.size()); }
    const std::vector<std::string>& words() const { return words_; }

    // -1 when the word is not in the vocabulary
    int word_id(std::string_view word) const;
    bool is_word(int id) const { return id >= 256 && id < vocab_size(); }

    std::vector<int> encode(std::string_view text) const;
    std::string decode(std::span<const int> ids) const;
    std::string decode_token(int id) const;

private:
    std::vector<std::string> words_;
    std::unordered_map<std::string, int> index_;
};

}  // namespace edlab
