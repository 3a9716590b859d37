#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "textsmooth/errors.hpp"
#include "textsmooth/rng.hpp"
#include "textsmooth/smoothing.hpp"
#include "textsmooth/synthetic.hpp"
#include "textsmooth/vocab.hpp"

using namespace textsmooth;

namespace {

struct Fixture {
    SyntheticTask task;
    ModelConfig config;
    TransformerParams teacher;
};

// A fresh (untrained) teacher is enough for the structural properties; the
// distill suite covers trained-teacher behavior.
const Fixture& fixture() {
    static const Fixture f = [] {
        Fixture out;
        SyntheticSpec spec;
        spec.n_train = 24;
        spec.n_test = 8;
        spec.corpus_size = 120;
        out.task = make_synthetic_task(spec);
        out.config.n_layers = 1;
        out.config.emb_size = 16;
        out.config.n_heads = 2;
        out.config.ffn_size = 32;
        out.config.vocab_size = out.task.vocab.size();
        out.config.max_seq_len = 16;
        out.config.dropout_rate = 0.1; // must stay inactive during smoothing
        out.teacher = init_params(out.config, 3);
        return out;
    }();
    return f;
}

} // namespace

TEST_CASE("mlm_distribution rows are stochastic and deterministic") {
    const Fixture& f = fixture();
    const EncodedInstance& inst = f.task.train.instances[0];
    const Tensor d1 = mlm_distribution(f.teacher, inst);
    const Tensor d2 = mlm_distribution(f.teacher, inst);
    REQUIRE(d1.shape() == std::vector<int>{inst.seq_len(), f.config.vocab_size});
    for (int i = 0; i < d1.rows(); ++i) {
        double total = 0.0;
        for (int j = 0; j < d1.cols(); ++j) {
            CHECK(d1.at(i, j) >= 0.0);
            total += d1.at(i, j);
        }
        CHECK(std::fabs(total - 1.0) < 1e-9);
    }
    for (std::size_t i = 0; i < d1.size(); ++i) {
        CHECK(d1[i] == d2[i]);
    }
}

TEST_CASE("mlm_distribution rejects mask-corrupted input") {
    const Fixture& f = fixture();
    EncodedInstance inst = f.task.train.instances[0];
    inst.token_ids[2] = Vocabulary::mask_id;
    CHECK_THROWS_AS(mlm_distribution(f.teacher, inst), ContractError);
}

TEST_CASE("smooth_text at the endpoints") {
    const Fixture& f = fixture();
    const EncodedInstance& inst = f.task.train.instances[1];
    const Tensor dist = mlm_distribution(f.teacher, inst);

    SmoothingConfig keep_raw;
    keep_raw.lambda = 1.0;
    const SmoothedInstance raw = smooth_text(inst, dist, keep_raw);
    for (int i = 0; i < inst.seq_len(); ++i) {
        for (int j = 0; j < f.config.vocab_size; ++j) {
            const double expected =
                j == inst.token_ids[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
            CHECK(raw.distributions.at(i, j) == expected);
        }
    }

    SmoothingConfig all_teacher;
    all_teacher.lambda = 0.0;
    const SmoothedInstance soft = smooth_text(inst, dist, all_teacher);
    for (int i = 0; i < inst.seq_len(); ++i) {
        if (inst.attention_mask[static_cast<std::size_t>(i)] == 0) {
            CHECK(soft.distributions.at(i, Vocabulary::pad_id) == 1.0);
            continue;
        }
        for (int j = 0; j < f.config.vocab_size; ++j) {
            CHECK(soft.distributions.at(i, j) == doctest::Approx(dist.at(i, j)).epsilon(1e-15));
        }
    }
}

TEST_CASE("smooth_text direct interpolation arithmetic") {
    EncodedInstance inst;
    inst.token_ids = {0};
    inst.position_ids = {0};
    inst.segment_ids = {0};
    inst.attention_mask = {1};
    inst.label = 0;
    const Tensor mlm({1, 3}, {0.5, 0.3, 0.2});
    SmoothingConfig cfg;
    cfg.lambda = 0.5;
    const SmoothedInstance out = smooth_text(inst, mlm, cfg);
    CHECK(out.distributions.at(0, 0) == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(out.distributions.at(0, 1) == doctest::Approx(0.15).epsilon(1e-15));
    CHECK(out.distributions.at(0, 2) == doctest::Approx(0.10).epsilon(1e-15));
}

TEST_CASE("smooth_text validates lambda") {
    SmoothingConfig bad;
    bad.lambda = 1.5;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad.lambda = -0.1;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("special token exemption flag") {
    const Fixture& f = fixture();
    const EncodedInstance& inst = f.task.train.instances[2];
    const Tensor dist = mlm_distribution(f.teacher, inst);
    SmoothingConfig cfg;
    cfg.lambda = 0.5;
    cfg.exempt_special_tokens = true;
    const SmoothedInstance out = smooth_text(inst, dist, cfg);
    for (int i = 0; i < inst.seq_len(); ++i) {
        const int tok = inst.token_ids[static_cast<std::size_t>(i)];
        if (tok == Vocabulary::cls_id || tok == Vocabulary::sep_id) {
            CHECK(out.distributions.at(i, tok) == 1.0);
        }
    }
    // default keeps Eq-style smoothing on specials: [CLS] row is mixed
    SmoothingConfig default_cfg;
    default_cfg.lambda = 0.5;
    const SmoothedInstance mixed = smooth_text(inst, dist, default_cfg);
    CHECK(mixed.distributions.at(0, Vocabulary::cls_id) < 1.0);
    CHECK(mixed.distributions.at(0, Vocabulary::cls_id) >= 0.5);
}

TEST_CASE("smoothed rows stay stochastic and padding stays one-hot across lambda sweep") {
    const Fixture& f = fixture();
    for (const double lam : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        SmoothingConfig cfg;
        cfg.lambda = lam;
        const SmoothResult result = smooth_dataset(f.teacher, f.task.train, cfg);
        for (const SmoothedInstance& inst : result.instances) {
            for (int i = 0; i < inst.seq_len(); ++i) {
                double total = 0.0;
                double min_entry = 1.0;
                for (int j = 0; j < inst.distributions.cols(); ++j) {
                    total += inst.distributions.at(i, j);
                    min_entry = std::min(min_entry, inst.distributions.at(i, j));
                }
                CHECK(total >= 1.0 - 1e-9);
                CHECK(total <= 1.0 + 1e-9);
                CHECK(min_entry >= 0.0);
                if (inst.attention_mask[static_cast<std::size_t>(i)] == 0) {
                    CHECK(inst.distributions.at(i, Vocabulary::pad_id) == 1.0);
                }
            }
        }
    }
}

TEST_CASE("mass on the original token is monotone in lambda") {
    const Fixture& f = fixture();
    const EncodedInstance& inst = f.task.train.instances[3];
    const Tensor dist = mlm_distribution(f.teacher, inst);
    std::vector<double> lambdas = {0.0, 0.25, 0.5, 0.75, 1.0};
    std::vector<Tensor> smoothed;
    for (double lam : lambdas) {
        SmoothingConfig cfg;
        cfg.lambda = lam;
        smoothed.push_back(smooth_text(inst, dist, cfg).distributions);
    }
    for (std::size_t k = 1; k < lambdas.size(); ++k) {
        for (int i = 0; i < inst.seq_len(); ++i) {
            const int tok = inst.token_ids[static_cast<std::size_t>(i)];
            CHECK(smoothed[k].at(i, tok) >= smoothed[k - 1].at(i, tok) - 1e-12);
        }
    }
}

TEST_CASE("smooth_dataset runs exactly one teacher forward per instance") {
    const Fixture& f = fixture();
    SmoothingConfig cfg;
    const SmoothResult result = smooth_dataset(f.teacher, f.task.train, cfg);
    CHECK(result.teacher_forwards == f.task.train.size());
    CHECK(result.instances.size() == f.task.train.size());
}

TEST_CASE("smoothing leaves the teacher untouched and is order-preserving") {
    const Fixture& f = fixture();
    TransformerParams teacher = f.teacher;
    const std::uint64_t before = params_checksum(teacher);
    SmoothingConfig cfg;
    const SmoothResult result = smooth_dataset(teacher, f.task.train, cfg);
    CHECK(params_checksum(teacher) == before);
    for (std::size_t i = 0; i < result.instances.size(); ++i) {
        CHECK(result.instances[i].token_ids == f.task.train.instances[i].token_ids);
        CHECK(result.instances[i].label == f.task.train.instances[i].label);
    }
}

TEST_CASE("smoothed cache round trips bit-exactly") {
    namespace fs = std::filesystem;
    const Fixture& f = fixture();
    SmoothingConfig cfg;
    cfg.lambda = 0.25;
    const SmoothResult result = smooth_dataset(f.teacher, f.task.train, cfg);
    const std::uint64_t teacher_sum = params_checksum(f.teacher);
    const fs::path path = fs::temp_directory_path() / "textsmooth_test_cache.bin";
    save_smoothed_cache(path.string(), result, cfg, teacher_sum, f.config.vocab_size);
    const SmoothedCache cache = load_smoothed_cache(path.string());
    CHECK(cache.config.lambda == 0.25);
    CHECK(cache.teacher_checksum == teacher_sum);
    CHECK(cache.vocab_size == f.config.vocab_size);
    CHECK(cache.result.teacher_forwards == result.teacher_forwards);
    REQUIRE(cache.result.instances.size() == result.instances.size());
    for (std::size_t k = 0; k < result.instances.size(); ++k) {
        const SmoothedInstance& a = result.instances[k];
        const SmoothedInstance& b = cache.result.instances[k];
        CHECK(a.token_ids == b.token_ids);
        CHECK(a.segment_ids == b.segment_ids);
        CHECK(a.attention_mask == b.attention_mask);
        CHECK(a.label == b.label);
        REQUIRE(a.distributions.size() == b.distributions.size());
        for (std::size_t i = 0; i < a.distributions.size(); ++i) {
            CHECK(a.distributions[i] == b.distributions[i]);
        }
    }
    fs::remove(path);
}
