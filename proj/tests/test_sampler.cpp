#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "textsmooth/errors.hpp"
#include "textsmooth/rng.hpp"
#include "textsmooth/sampler.hpp"
#include "textsmooth/smoothing.hpp"
#include "textsmooth/synthetic.hpp"

using namespace textsmooth;

namespace {

struct Fixture {
    SyntheticTask task;
    TransformerParams teacher;
    SmoothedInstance smoothed_half;   // lambda 0.5
    SmoothedInstance smoothed_raw;    // lambda 1
};

const Fixture& fixture() {
    static const Fixture f = [] {
        Fixture out;
        SyntheticSpec spec;
        spec.n_train = 8;
        spec.n_test = 16;
        spec.corpus_size = 150;
        out.task = make_synthetic_task(spec);
        ModelConfig config;
        config.n_layers = 1;
        config.emb_size = 16;
        config.n_heads = 2;
        config.ffn_size = 32;
        config.vocab_size = out.task.vocab.size();
        config.max_seq_len = 16;
        out.teacher = init_params(config, 5);
        const EncodedInstance& inst = out.task.test.instances[0];
        const Tensor dist = mlm_distribution(out.teacher, inst);
        SmoothingConfig half;
        half.lambda = 0.5;
        out.smoothed_half = smooth_text(inst, dist, half);
        SmoothingConfig raw;
        raw.lambda = 1.0;
        out.smoothed_raw = smooth_text(inst, dist, raw);
        return out;
    }();
    return f;
}

std::vector<int> raw_free_tokens(const SmoothedInstance& s) {
    std::vector<int> out;
    for (int pos : free_positions(s)) {
        out.push_back(s.token_ids[static_cast<std::size_t>(pos)]);
    }
    return out;
}

} // namespace

TEST_CASE("lambda=1 sampling reproduces the raw sentence with probability one") {
    const Fixture& f = fixture();
    const std::vector<SampledSentence> samples =
        sample_sentences(f.smoothed_raw, f.task.vocab, 20, 3);
    const std::vector<int> raw = raw_free_tokens(f.smoothed_raw);
    for (const SampledSentence& s : samples) {
        CHECK(s.token_ids == raw);
        CHECK(s.probability == 1.0);
        CHECK(s.log_probability == 0.0);
    }
}

TEST_CASE("same seed gives identical samples, different seeds differ") {
    const Fixture& f = fixture();
    const auto a = sample_sentences(f.smoothed_half, f.task.vocab, 12, 77);
    const auto b = sample_sentences(f.smoothed_half, f.task.vocab, 12, 77);
    REQUIRE(a.size() == b.size());
    bool all_equal = true;
    for (std::size_t i = 0; i < a.size(); ++i) {
        all_equal = all_equal && a[i].token_ids == b[i].token_ids;
        CHECK(a[i].log_probability == b[i].log_probability);
    }
    CHECK(all_equal);
    const auto c = sample_sentences(f.smoothed_half, f.task.vocab, 12, 78);
    bool any_difference = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        any_difference = any_difference || a[i].token_ids != c[i].token_ids;
    }
    CHECK(any_difference);
}

TEST_CASE("empirical frequencies match the row distribution within TV 0.02") {
    // Statistical oracle on a known row: at 10,000 draws the expected total
    // variation of this 8-way distribution is well under the 0.02 bound.
    const Vocabulary vocab = Vocabulary::build({"a b c d e f g h"}, 1);
    SmoothedInstance s;
    s.token_ids = {Vocabulary::cls_id, 5, Vocabulary::sep_id};
    s.position_ids = {0, 1, 2};
    s.segment_ids = {0, 0, 0};
    s.attention_mask = {1, 1, 1};
    const std::vector<double> row = {0.005, 0.015, 0.03, 0.05, 0.1, 0.5, 0.2, 0.1,
                                     0.0,   0.0,   0.0,  0.0,  0.0};
    s.distributions = Tensor({3, vocab.size()});
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < vocab.size(); ++j) {
            s.distributions.at(i, j) = row[static_cast<std::size_t>(j)];
        }
    }
    const int n_draws = 10000;
    const auto samples = sample_sentences(s, vocab, n_draws, 3);
    std::vector<double> freq(static_cast<std::size_t>(vocab.size()), 0.0);
    for (const SampledSentence& sent : samples) {
        freq[static_cast<std::size_t>(sent.token_ids[0])] += 1.0 / n_draws;
    }
    double tv = 0.0;
    for (int j = 0; j < vocab.size(); ++j) {
        tv += std::fabs(freq[static_cast<std::size_t>(j)] - s.distributions.at(1, j));
    }
    tv *= 0.5;
    MESSAGE("total variation ", tv);
    CHECK(tv < 0.02);
}

TEST_CASE("sentence probability of uniform rows") {
    SmoothedInstance s;
    s.token_ids = {2, 5, 6, 7, 3};  // CLS w w w SEP
    s.position_ids = {0, 1, 2, 3, 4};
    s.segment_ids = {0, 0, 0, 0, 0};
    s.attention_mask = {1, 1, 1, 1, 1};
    s.distributions = Tensor::filled({5, 4}, 0.25);
    const double p = sentence_probability(s, {1, 2, 3});
    CHECK(p == doctest::Approx(0.015625).epsilon(1e-12)); // 0.25^3
}

TEST_CASE("probability handles length and range errors") {
    const Fixture& f = fixture();
    CHECK_THROWS_AS(sentence_probability(f.smoothed_half, {1, 2}), ShapeError);
    std::vector<int> bad = raw_free_tokens(f.smoothed_half);
    bad[0] = 100000;
    CHECK_THROWS_AS(sentence_probability(f.smoothed_half, bad), ShapeError);
}

TEST_CASE("argmax sentence dominates every sample") {
    const Fixture& f = fixture();
    const SampledSentence greedy = argmax_sentence(f.smoothed_half, f.task.vocab);
    const auto samples = sample_sentences(f.smoothed_half, f.task.vocab, 200, 9);
    for (const SampledSentence& s : samples) {
        CHECK(s.log_probability <= greedy.log_probability + 1e-12);
    }
    // at lambda 0.5 the raw token holds at least half of every row, so the
    // greedy sentence is the raw sentence itself
    CHECK(greedy.token_ids == raw_free_tokens(f.smoothed_half));
}

TEST_CASE("top_sentences are unique, sorted, and score-consistent") {
    const Fixture& f = fixture();
    const auto top = top_sentences(f.smoothed_half, f.task.vocab, 400, 5, 123);
    REQUIRE(!top.empty());
    CHECK(top.size() <= 5);
    std::set<std::vector<int>> seen;
    for (std::size_t i = 0; i < top.size(); ++i) {
        CHECK(top[i].rank == static_cast<int>(i) + 1);
        CHECK(seen.insert(top[i].token_ids).second); // pairwise distinct
        if (i > 0) {
            CHECK(top[i].log_probability <= top[i - 1].log_probability);
        }
        const double recomputed =
            sentence_log_probability(f.smoothed_half, top[i].token_ids);
        CHECK(std::fabs(recomputed - top[i].log_probability) < 1e-12);
    }
}

TEST_CASE("exempt positions never vary across samples") {
    const Fixture& f = fixture();
    const std::vector<int> free = free_positions(f.smoothed_half);
    const auto samples = sample_sentences(f.smoothed_half, f.task.vocab, 50, 31);
    // free positions exclude CLS/SEP/padding by construction; every sampled
    // sentence has exactly one token per free position
    for (const SampledSentence& s : samples) {
        CHECK(s.token_ids.size() == free.size());
    }
    const int seq = f.smoothed_half.seq_len();
    CHECK(static_cast<int>(free.size()) < seq);
}

TEST_CASE("report block format") {
    const Fixture& f = fixture();
    const auto top = top_sentences(f.smoothed_half, f.task.vocab, 100, 3, 7);
    const std::string block = render_report_block("the raw text", top);
    CHECK(block.rfind("the raw text\n", 0) == 0);
    std::size_t lines = 0;
    for (char c : block) {
        lines += c == '\n';
    }
    CHECK(lines == 1 + top.size());
    CHECK(block.find("1\t") != std::string::npos);
}

TEST_CASE("top_sentences validates its counts") {
    const Fixture& f = fixture();
    CHECK_THROWS_AS(top_sentences(f.smoothed_half, f.task.vocab, 5, 10, 1),
                    ContractError);
    CHECK_THROWS_AS(sample_sentences(f.smoothed_half, f.task.vocab, 0, 1),
                    ContractError);
}
