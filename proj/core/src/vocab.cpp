#include "textsmooth/vocab.hpp"

#include <algorithm>
#include <cctype>
#include <map>

#include "textsmooth/errors.hpp"

namespace textsmooth {

namespace {

const char* kReserved[] = {"[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"};

bool is_word_byte(unsigned char c) { return std::isalnum(c) != 0; }

// Length of the UTF-8 sequence starting at s[i]; 1 for invalid lead bytes.
std::size_t utf8_len(std::string_view s, std::size_t i) {
    const unsigned char c = static_cast<unsigned char>(s[i]);
    std::size_t n = 1;
    if ((c & 0xe0) == 0xc0) n = 2;
    else if ((c & 0xf0) == 0xe0) n = 3;
    else if ((c & 0xf8) == 0xf0) n = 4;
    if (i + n > s.size()) return 1;
    for (std::size_t k = 1; k < n; ++k) {
        if ((static_cast<unsigned char>(s[i + k]) & 0xc0) != 0x80) return 1;
    }
    return n;
}

} // namespace

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::string word;
    auto flush = [&] {
        if (!word.empty()) {
            out.push_back(word);
            word.clear();
        }
    };
    std::size_t i = 0;
    while (i < text.size()) {
        const unsigned char c = static_cast<unsigned char>(text[i]);
        if (c < 0x80) {
            if (std::isspace(c)) {
                flush();
            } else if (is_word_byte(c)) {
                word.push_back(static_cast<char>(std::tolower(c)));
            } else {
                flush();
                out.emplace_back(1, static_cast<char>(c));
            }
            ++i;
        } else {
            // non-ASCII codepoint: a standalone punctuation-like token
            flush();
            const std::size_t n = utf8_len(text, i);
            out.emplace_back(text.substr(i, n));
            i += n;
        }
    }
    flush();
    return out;
}

Vocabulary Vocabulary::build(const std::vector<std::string>& corpus, int min_freq) {
    if (corpus.empty()) {
        throw ParseError("build_vocab: empty corpus");
    }
    if (min_freq < 1) {
        throw ContractError("build_vocab: min_freq must be positive");
    }
    std::map<std::string, long> freq; // ordered map gives the lexicographic tiebreak
    for (const std::string& text : corpus) {
        for (const std::string& tok : tokenize(text)) {
            ++freq[tok];
        }
    }
    std::vector<std::pair<std::string, long>> entries;
    entries.reserve(freq.size());
    for (const auto& [tok, n] : freq) {
        if (n >= min_freq) {
            entries.emplace_back(tok, n);
        }
    }
    std::stable_sort(entries.begin(), entries.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });

    Vocabulary v;
    for (const char* r : kReserved) {
        v.token_to_id_.emplace(r, static_cast<int>(v.id_to_token_.size()));
        v.id_to_token_.emplace_back(r);
    }
    for (const auto& [tok, n] : entries) {
        (void)n;
        if (v.token_to_id_.count(tok)) {
            continue; // a literal reserved string in the corpus keeps its reserved id
        }
        v.token_to_id_.emplace(tok, static_cast<int>(v.id_to_token_.size()));
        v.id_to_token_.push_back(tok);
    }
    return v;
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> id_to_token) {
    if (id_to_token.size() < num_reserved) {
        throw ParseError("vocabulary must contain the reserved tokens");
    }
    for (int i = 0; i < num_reserved; ++i) {
        if (id_to_token[static_cast<std::size_t>(i)] != kReserved[i]) {
            throw ParseError("reserved token mismatch at id " + std::to_string(i) +
                             ": got '" + id_to_token[static_cast<std::size_t>(i)] + "'");
        }
    }
    Vocabulary v;
    v.id_to_token_ = std::move(id_to_token);
    for (std::size_t i = 0; i < v.id_to_token_.size(); ++i) {
        const auto [it, inserted] =
            v.token_to_id_.emplace(v.id_to_token_[i], static_cast<int>(i));
        if (!inserted) {
            throw ParseError("duplicate token '" + v.id_to_token_[i] + "' in vocabulary");
        }
    }
    return v;
}

int Vocabulary::id(const std::string& token) const {
    const auto it = token_to_id_.find(token);
    return it == token_to_id_.end() ? unk_id : it->second;
}

const std::string& Vocabulary::token(int id) const {
    if (id < 0 || id >= size()) {
        throw ContractError("token id " + std::to_string(id) + " out of range [0," +
                            std::to_string(size()) + ")");
    }
    return id_to_token_[static_cast<std::size_t>(id)];
}

bool Vocabulary::contains(const std::string& token) const {
    return token_to_id_.count(token) != 0;
}

std::vector<int> Vocabulary::encode(const std::vector<std::string>& tokens) const {
    std::vector<int> ids;
    ids.reserve(tokens.size());
    for (const std::string& t : tokens) {
        ids.push_back(id(t));
    }
    return ids;
}

} // namespace textsmooth
