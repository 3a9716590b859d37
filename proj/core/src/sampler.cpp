#include "textsmooth/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "textsmooth/errors.hpp"
#include "textsmooth/rng.hpp"

namespace textsmooth {

std::vector<int> free_positions(const SmoothedInstance& smoothed) {
    std::vector<int> out;
    for (int i = 0; i < smoothed.seq_len(); ++i) {
        const int tok = smoothed.token_ids[static_cast<std::size_t>(i)];
        if (smoothed.attention_mask[static_cast<std::size_t>(i)] == 1 &&
            tok != Vocabulary::cls_id && tok != Vocabulary::sep_id) {
            out.push_back(i);
        }
    }
    return out;
}

namespace {

std::string join_tokens(const std::vector<int>& ids, const Vocabulary& vocab) {
    std::string text;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (i) {
            text += ' ';
        }
        text += vocab.token(ids[i]);
    }
    return text;
}

int sample_from_row(const double* row, int width, Rng& rng) {
    const double u = rng.uniform();
    double acc = 0.0;
    for (int j = 0; j < width; ++j) {
        acc += row[j];
        if (u < acc) {
            return j;
        }
    }
    return width - 1; // row sums to 1 within tolerance; capture the remainder
}

} // namespace

std::vector<SampledSentence> sample_sentences(const SmoothedInstance& smoothed,
                                              const Vocabulary& vocab, int k,
                                              std::uint64_t seed) {
    if (k < 1) {
        throw ContractError("sample_sentences: k must be at least 1");
    }
    const std::vector<int> free = free_positions(smoothed);
    const int width = smoothed.distributions.cols();
    Rng rng(mix64(seed, 0x5a3eULL));
    std::vector<SampledSentence> out;
    out.reserve(static_cast<std::size_t>(k));
    for (int s = 0; s < k; ++s) {
        SampledSentence sent;
        sent.token_ids.reserve(free.size());
        double logp = 0.0;
        for (int pos : free) {
            const double* row = smoothed.distributions.row_ptr(pos);
            const int id = sample_from_row(row, width, rng);
            sent.token_ids.push_back(id);
            logp += std::log(row[id]);
        }
        sent.log_probability = logp;
        sent.probability = std::exp(logp);
        sent.text = join_tokens(sent.token_ids, vocab);
        out.push_back(std::move(sent));
    }
    return out;
}

double sentence_log_probability(const SmoothedInstance& smoothed,
                                const std::vector<int>& token_ids) {
    const std::vector<int> free = free_positions(smoothed);
    if (token_ids.size() != free.size()) {
        throw ShapeError("sentence_log_probability: got " +
                         std::to_string(token_ids.size()) + " tokens for " +
                         std::to_string(free.size()) + " free positions");
    }
    const int width = smoothed.distributions.cols();
    double logp = 0.0;
    for (std::size_t i = 0; i < free.size(); ++i) {
        const int id = token_ids[i];
        if (id < 0 || id >= width) {
            throw ShapeError("sentence_log_probability: token id " +
                             std::to_string(id) + " out of range");
        }
        logp += std::log(smoothed.distributions.at(free[i], id));
    }
    return logp;
}

double sentence_probability(const SmoothedInstance& smoothed,
                            const std::vector<int>& token_ids) {
    return std::exp(sentence_log_probability(smoothed, token_ids));
}

SampledSentence argmax_sentence(const SmoothedInstance& smoothed,
                                const Vocabulary& vocab) {
    SampledSentence sent;
    const int width = smoothed.distributions.cols();
    for (int pos : free_positions(smoothed)) {
        const double* row = smoothed.distributions.row_ptr(pos);
        int best = 0;
        for (int j = 1; j < width; ++j) {
            if (row[j] > row[best]) {
                best = j;
            }
        }
        sent.token_ids.push_back(best);
    }
    sent.log_probability = sentence_log_probability(smoothed, sent.token_ids);
    sent.probability = std::exp(sent.log_probability);
    sent.text = join_tokens(sent.token_ids, vocab);
    return sent;
}

std::vector<SampledSentence> top_sentences(const SmoothedInstance& smoothed,
                                           const Vocabulary& vocab, int n_samples,
                                           int n_report, std::uint64_t seed) {
    if (n_report < 1 || n_report > n_samples) {
        throw ContractError("top_sentences: need 1 <= n_report <= n_samples");
    }
    std::vector<SampledSentence> samples =
        sample_sentences(smoothed, vocab, n_samples, seed);
    std::map<std::vector<int>, SampledSentence> unique;
    for (SampledSentence& s : samples) {
        unique.emplace(s.token_ids, std::move(s));
    }
    std::vector<SampledSentence> ranked;
    ranked.reserve(unique.size());
    for (auto& [ids, s] : unique) {
        // recompute from scratch so the stored value is the exact product
        s.log_probability = sentence_log_probability(smoothed, ids);
        s.probability = std::exp(s.log_probability);
        ranked.push_back(std::move(s));
    }
    std::sort(ranked.begin(), ranked.end(),
              [](const SampledSentence& a, const SampledSentence& b) {
                  if (a.log_probability != b.log_probability) {
                      return a.log_probability > b.log_probability;
                  }
                  return a.text < b.text;
              });
    if (static_cast<int>(ranked.size()) > n_report) {
        ranked.resize(static_cast<std::size_t>(n_report));
    }
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        ranked[i].rank = static_cast<int>(i) + 1;
    }
    return ranked;
}

std::string render_report_block(const std::string& raw_text,
                                const std::vector<SampledSentence>& samples) {
    std::ostringstream os;
    os << raw_text << '\n';
    char buf[64];
    for (const SampledSentence& s : samples) {
        std::snprintf(buf, sizeof(buf), "%.6g", s.probability);
        os << s.rank << '\t' << buf << '\t' << s.text << '\n';
    }
    return os.str();
}

} // namespace textsmooth
