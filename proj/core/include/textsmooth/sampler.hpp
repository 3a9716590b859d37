#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "textsmooth/smoothing.hpp"
#include "textsmooth/vocab.hpp"

namespace textsmooth {

// A fake sentence drawn from a smoothed instance. probability is the product
// of the per-position row probabilities over the free (non-[CLS]/[SEP]/pad)
// positions, accumulated in log space.
struct SampledSentence {
    std::vector<int> token_ids; // free positions only, in order
    std::string text;           // tokens joined by single spaces
    double log_probability = 0.0;
    double probability = 1.0;
    int rank = 0;
};

// Draws k sentences, each position sampled independently from its smoothed
// row; [CLS]/[SEP]/padding positions always emit their fixed tokens.
// Repetition is possible; deterministic under seed.
std::vector<SampledSentence> sample_sentences(const SmoothedInstance& smoothed,
                                              const Vocabulary& vocab, int k,
                                              std::uint64_t seed);

// Log of the product over free positions of row[pos][id]. ids must cover the
// free positions in order.
double sentence_log_probability(const SmoothedInstance& smoothed,
                                const std::vector<int>& token_ids);
double sentence_probability(const SmoothedInstance& smoothed,
                            const std::vector<int>& token_ids);

// Sample n_samples sentences, dedupe by token ids, sort by exact probability
// (ties broken lexicographically by text) and keep the first n_report.
std::vector<SampledSentence> top_sentences(const SmoothedInstance& smoothed,
                                           const Vocabulary& vocab, int n_samples,
                                           int n_report, std::uint64_t seed);

// The greedy per-position argmax sentence; an upper bound on every sample's
// probability.
SampledSentence argmax_sentence(const SmoothedInstance& smoothed,
                                const Vocabulary& vocab);

// Free positions of an instance (real tokens that are not [CLS]/[SEP]).
std::vector<int> free_positions(const SmoothedInstance& smoothed);

// One report block: the raw text line, then per sample
// "rank<TAB>probability (6 significant digits)<TAB>sentence".
std::string render_report_block(const std::string& raw_text,
                                const std::vector<SampledSentence>& samples);

} // namespace textsmooth
