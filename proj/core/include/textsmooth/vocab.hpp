#pragma once

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace textsmooth {

// Word-level tokenizer: lowercase ASCII, split on whitespace, every
// non-alphanumeric codepoint becomes its own token. UTF-8 aware so that
// multi-byte punctuation stays a single token.
std::vector<std::string> tokenize(std::string_view text);

// Token <-> id bijection with fixed reserved ids. Immutable after build.
class Vocabulary {
public:
    static constexpr int pad_id = 0;
    static constexpr int unk_id = 1;
    static constexpr int cls_id = 2;
    static constexpr int sep_id = 3;
    static constexpr int mask_id = 4;
    static constexpr int num_reserved = 5;

    Vocabulary() = default;

    // Tokens ordered by (descending frequency, then lexicographic); tokens
    // below min_freq are dropped and map to [UNK] at encode time.
    static Vocabulary build(const std::vector<std::string>& corpus, int min_freq);

    // Rebuild from an id-ordered token list (checkpoint load). Validates the
    // reserved prefix and the bijection.
    static Vocabulary from_tokens(std::vector<std::string> id_to_token);

    int id(const std::string& token) const;  // unk_id when absent
    const std::string& token(int id) const;
    bool contains(const std::string& token) const;
    int size() const { return static_cast<int>(id_to_token_.size()); }
    const std::vector<std::string>& tokens() const { return id_to_token_; }

    std::vector<int> encode(const std::vector<std::string>& tokens) const;

private:
    std::vector<std::string> id_to_token_;
    std::unordered_map<std::string, int> token_to_id_;
};

} // namespace textsmooth
