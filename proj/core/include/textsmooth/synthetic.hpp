#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "textsmooth/data.hpp"
#include "textsmooth/vocab.hpp"

namespace textsmooth {

// Template-grammar binary sentiment task. Sentences are movie-review style
// with one or two sentiment slots filled from disjoint positive/negative
// synonym pools; every other slot (subject, verb, quantifier, topic, ...)
// is label-neutral. Most templates carry two same-polarity slots so a
// masked-language teacher can learn polarity agreement from context.
//
// Train sentences draw sentiment words from a rank-tilted distribution while
// test and corpus sentences draw uniformly, so pool tails are rare in the
// labeled training data but common at test time.
struct SyntheticSpec {
    std::uint64_t seed = 7;
    int vocab_size = 200; // approximate target including the 5 reserved ids
    int n_train = 80;
    int n_test = 400;
    int corpus_size = 1400; // unlabeled sentences for vocab + MLM pretraining
    int max_seq_len = 16;
};

struct SyntheticTask {
    std::vector<std::string> corpus;
    Vocabulary vocab;
    Dataset train;
    Dataset test;
};

SyntheticTask make_synthetic_task(const SyntheticSpec& spec);

} // namespace textsmooth
