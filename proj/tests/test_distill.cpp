#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <map>

#include "textsmooth/distill.hpp"
#include "textsmooth/errors.hpp"
#include "textsmooth/io_util.hpp"
#include "textsmooth/rng.hpp"
#include "textsmooth/synthetic.hpp"

using namespace textsmooth;

namespace {

struct Fixture {
    SyntheticTask task;
    ModelConfig teacher_config;
    ModelConfig student_config;
    TransformerParams teacher; // briefly MLM-pretrained
};

ModelConfig small_config(int layers, int vocab_size) {
    ModelConfig c;
    c.n_layers = layers;
    c.emb_size = 32;
    c.n_heads = 2;
    c.ffn_size = 64;
    c.vocab_size = vocab_size;
    c.max_seq_len = 16;
    c.n_labels = 2;
    c.dropout_rate = 0.1;
    return c;
}

const Fixture& fixture() {
    static const Fixture f = [] {
        Fixture out;
        SyntheticSpec spec;
        spec.n_train = 24;
        spec.n_test = 64;
        spec.corpus_size = 300;
        out.task = make_synthetic_task(spec);
        out.teacher_config = small_config(2, out.task.vocab.size());
        out.student_config = small_config(1, out.task.vocab.size());
        TrainConfig cfg;
        cfg.epochs = 40;
        cfg.batch_size = 8;
        cfg.learning_rate = 2e-3;
        cfg.seed = 11;
        out.teacher = pretrain_mlm(out.teacher_config, out.task.corpus, out.task.vocab, cfg);
        return out;
    }();
    return f;
}

TrainConfig quick_train(std::uint64_t seed) {
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.batch_size = 4;
    cfg.learning_rate = 5e-4;
    cfg.seed = seed;
    return cfg;
}

} // namespace

TEST_CASE("pretraining loss decreases over the first three epochs") {
    const Fixture& f = fixture();
    ModelConfig config = small_config(1, f.task.vocab.size());
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.batch_size = 8;
    cfg.learning_rate = 1e-3;
    cfg.seed = 4;
    MetricsReport report;
    pretrain_mlm(config, f.task.corpus, f.task.vocab, cfg, &report);
    REQUIRE(report.epoch_loss.size() == 3);
    CHECK(report.epoch_loss[1] < report.epoch_loss[0]);
    CHECK(report.epoch_loss[2] < report.epoch_loss[1]);
}

TEST_CASE("masked recovery beats the unigram baseline after pretraining") {
    const Fixture& f = fixture();
    // brute-force unigram baseline: always predict the most frequent token
    std::map<std::string, long> freq;
    for (const std::string& text : f.task.corpus) {
        for (const std::string& tok : tokenize(text)) {
            ++freq[tok];
        }
    }
    long total = 0, best = 0;
    for (const auto& [tok, n] : freq) {
        total += n;
        best = std::max(best, n);
    }
    const double unigram = static_cast<double>(best) / static_cast<double>(total);
    const double recovery =
        mlm_recovery_accuracy(f.teacher, f.task.corpus, f.task.vocab, 99);
    MESSAGE("recovery ", recovery, " vs unigram baseline ", unigram);
    CHECK(recovery > unigram);
}

TEST_CASE("zero mask probability is a skip-step with no parameter change") {
    const Fixture& f = fixture();
    ModelConfig config = small_config(1, f.task.vocab.size());
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.batch_size = 8;
    cfg.learning_rate = 1e-3;
    cfg.seed = 5;
    cfg.mlm_mask_prob = 0.0;
    MetricsReport report;
    const TransformerParams after =
        pretrain_mlm(config, f.task.corpus, f.task.vocab, cfg, &report);
    CHECK(report.step_losses.empty());
    CHECK(report.epoch_loss[0] == 0.0);
    CHECK(params_checksum(after) == params_checksum(init_params(config, cfg.seed)));
}

TEST_CASE("mlm distribution argmax is the input token at most free positions") {
    const Fixture& f = fixture();
    // [CLS]/[SEP] are never MLM targets, so copying is only expected at the
    // real word positions that smoothing and sampling actually consume
    long hits = 0, total = 0;
    for (std::size_t k = 0; k < 8; ++k) {
        const EncodedInstance& inst = f.task.test.instances[k];
        const Tensor dist = mlm_distribution(f.teacher, inst);
        for (int i = 0; i < inst.seq_len(); ++i) {
            const int tok = inst.token_ids[static_cast<std::size_t>(i)];
            if (inst.attention_mask[static_cast<std::size_t>(i)] == 0 ||
                tok == Vocabulary::cls_id || tok == Vocabulary::sep_id) {
                continue;
            }
            int best = 0;
            for (int j = 1; j < dist.cols(); ++j) {
                if (dist.at(i, j) > dist.at(i, best)) {
                    best = j;
                }
            }
            hits += best == inst.token_ids[static_cast<std::size_t>(i)];
            ++total;
        }
    }
    MESSAGE("argmax hit rate ", static_cast<double>(hits) / static_cast<double>(total));
    CHECK(hits * 2 > total);
}

TEST_CASE("lambda=1 smoothed training equals direct fine-tuning bitwise") {
    const Fixture& f = fixture();
    SmoothingConfig smooth;
    smooth.lambda = 1.0;
    const SmoothResult smoothed = smooth_dataset(f.teacher, f.task.train, smooth);

    TransformerParams student_a = init_student_from_teacher(f.teacher, f.student_config, 42);
    TransformerParams student_b = student_a;
    const TrainConfig cfg = quick_train(21);
    const MetricsReport via_smoothing = train_student(student_a, smoothed.instances, cfg);
    const MetricsReport direct = finetune_baseline(student_b, f.task.train, cfg);

    REQUIRE(via_smoothing.step_losses.size() == direct.step_losses.size());
    for (std::size_t i = 0; i < direct.step_losses.size(); ++i) {
        CHECK(via_smoothing.step_losses[i] == direct.step_losses[i]);
    }
    for (std::size_t e = 0; e < direct.epoch_loss.size(); ++e) {
        CHECK(via_smoothing.epoch_loss[e] == direct.epoch_loss[e]);
    }
    CHECK(params_checksum(student_a) == params_checksum(student_b));
}

TEST_CASE("student training loss decreases on the synthetic task") {
    const Fixture& f = fixture();
    SmoothingConfig smooth;
    const SmoothResult smoothed = smooth_dataset(f.teacher, f.task.train, smooth);
    TransformerParams student = init_student_from_teacher(f.teacher, f.student_config, 1);
    TrainConfig cfg = quick_train(1);
    cfg.epochs = 4;
    cfg.learning_rate = 1e-3;
    const MetricsReport report = train_student(student, smoothed.instances, cfg);
    CHECK(report.epoch_loss.back() < report.epoch_loss.front());
}

TEST_CASE("one training step reaches every encoder layer") {
    const Fixture& f = fixture();
    SmoothingConfig smooth;
    const SmoothResult smoothed = smooth_dataset(f.teacher, f.task.train, smooth);
    TransformerParams student = init_student_from_teacher(f.teacher, f.teacher_config, 2);
    const std::uint64_t layer0_before = [&] {
        io::Fnv1a h;
        for (std::size_t i = 0; i < student.layers[0].attn_wq.size(); ++i) {
            h.add_f64(student.layers[0].attn_wq[i]);
        }
        return h.value();
    }();
    const std::uint64_t layer1_before = [&] {
        io::Fnv1a h;
        for (std::size_t i = 0; i < student.layers[1].attn_wq.size(); ++i) {
            h.add_f64(student.layers[1].attn_wq[i]);
        }
        return h.value();
    }();
    TrainConfig cfg = quick_train(3);
    cfg.epochs = 1;
    cfg.batch_size = static_cast<int>(smoothed.instances.size()); // one step
    train_student(student, smoothed.instances, cfg);
    io::Fnv1a h0, h1;
    for (std::size_t i = 0; i < student.layers[0].attn_wq.size(); ++i) {
        h0.add_f64(student.layers[0].attn_wq[i]);
    }
    for (std::size_t i = 0; i < student.layers[1].attn_wq.size(); ++i) {
        h1.add_f64(student.layers[1].attn_wq[i]);
    }
    CHECK(h0.value() != layer0_before);
    CHECK(h1.value() != layer1_before);
}

TEST_CASE("fine-tuning is deterministic and beats the majority class") {
    const Fixture& f = fixture();
    TransformerParams a = init_student_from_teacher(f.teacher, f.student_config, 9);
    TransformerParams b = a;
    TrainConfig cfg = quick_train(9);
    cfg.epochs = 10;
    cfg.learning_rate = 2e-3;
    const MetricsReport ra = finetune_baseline(a, f.task.train, cfg, &f.task.test);
    const MetricsReport rb = finetune_baseline(b, f.task.train, cfg, &f.task.test);
    CHECK(ra.step_losses == rb.step_losses);
    CHECK(ra.epoch_accuracy == rb.epoch_accuracy);
    CHECK(ra.final_accuracy == rb.final_accuracy);
    MESSAGE("finetune accuracy ", ra.final_accuracy);
    CHECK(ra.final_accuracy > 0.5);
}

TEST_CASE("kd with alpha zero equals fine-tuning bitwise") {
    const Fixture& f = fixture();
    TransformerParams kd_teacher = f.teacher;
    TrainConfig teacher_cfg = quick_train(31);
    finetune_baseline(kd_teacher, f.task.train, teacher_cfg);

    TransformerParams student_a = init_student_from_teacher(f.teacher, f.student_config, 8);
    TransformerParams student_b = student_a;
    TrainConfig cfg = quick_train(17);
    cfg.kd_alpha = 0.0;
    cfg.kd_temperature = 2.0;
    const MetricsReport kd = soft_label_kd(kd_teacher, student_a, f.task.train, cfg);
    const MetricsReport ft = finetune_baseline(student_b, f.task.train, cfg);
    REQUIRE(kd.step_losses.size() == ft.step_losses.size());
    for (std::size_t i = 0; i < kd.step_losses.size(); ++i) {
        CHECK(kd.step_losses[i] == ft.step_losses[i]);
    }
    CHECK(params_checksum(student_a) == params_checksum(student_b));
}

TEST_CASE("kd at extreme temperature approaches log n_labels") {
    const Fixture& f = fixture();
    TransformerParams kd_teacher = f.teacher;
    finetune_baseline(kd_teacher, f.task.train, quick_train(32));

    TransformerParams student = init_student_from_teacher(f.teacher, f.student_config, 12);
    TrainConfig cfg = quick_train(18);
    cfg.epochs = 1;
    cfg.batch_size = 1;
    cfg.kd_alpha = 1.0; // pure KD term
    cfg.kd_temperature = 1e4;
    const MetricsReport report = soft_label_kd(kd_teacher, student, f.task.train, cfg);
    CHECK(std::fabs(report.step_losses.front() - std::log(2.0)) < 1e-3);
}

TEST_CASE("kd requires a compatible teacher head") {
    const Fixture& f = fixture();
    ModelConfig wrong = f.teacher_config;
    wrong.n_labels = 5;
    const TransformerParams bad_teacher = init_params(wrong, 3);
    TransformerParams student = init_student_from_teacher(f.teacher, f.student_config, 1);
    CHECK_THROWS_AS(
        soft_label_kd(bad_teacher, student, f.task.train, quick_train(1)),
        ConfigError);
}

TEST_CASE("evaluate: untrained students hover near chance, and reruns are identical") {
    const Fixture& f = fixture();
    double sum = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const TransformerParams random_student = init_params(f.student_config, seed * 131);
        const EvalResult r = evaluate(random_student, f.task.test);
        sum += r.accuracy;
    }
    const double mean = sum / 5.0;
    MESSAGE("untrained mean accuracy ", mean);
    CHECK(mean == doctest::Approx(0.5).epsilon(0.2));

    const TransformerParams student = init_params(f.student_config, 77);
    const EvalResult a = evaluate(student, f.task.test);
    const EvalResult b = evaluate(student, f.task.test);
    CHECK(a.accuracy == b.accuracy);
    CHECK(a.per_class_correct == b.per_class_correct);
    CHECK(a.per_class_total == b.per_class_total);
    long total = 0;
    for (long t : a.per_class_total) {
        total += t;
    }
    CHECK(total == static_cast<long>(f.task.test.size()));
}

TEST_CASE("a memorizing student scores 1.0 on its own training set") {
    const Fixture& f = fixture();
    Dataset tiny;
    tiny.label_set = f.task.train.label_set;
    tiny.max_seq_len = f.task.train.max_seq_len;
    tiny.instances.assign(f.task.train.instances.begin(),
                          f.task.train.instances.begin() + 8);
    TransformerParams student = init_student_from_teacher(f.teacher, f.student_config, 6);
    TrainConfig cfg;
    cfg.epochs = 40;
    cfg.batch_size = 4;
    cfg.learning_rate = 2e-3;
    cfg.seed = 6;
    finetune_baseline(student, tiny, cfg);
    const EvalResult r = evaluate(student, tiny);
    CHECK(r.accuracy == 1.0);
}

TEST_CASE("evaluate never builds distribution-form inputs") {
    const Fixture& f = fixture();
    const TransformerParams student = init_params(f.student_config, 3);
    const std::uint64_t before = distribution_embed_count();
    evaluate(student, f.task.test);
    CHECK(distribution_embed_count() == before);
}

TEST_CASE("metrics records round trip losslessly") {
    namespace fs = std::filesystem;
    MetricsReport report;
    report.method = "textsmooth";
    report.seed = 99;
    report.epoch_loss = {0.6931471805599453, 0.1234567890123456789};
    report.epoch_seconds = {1.5, 2.25};
    report.epoch_accuracy = {0.5, 0.875};
    report.teacher_forward_count = 24;
    const std::vector<MetricsRecord> records = to_records(report);
    const fs::path path = fs::temp_directory_path() / "textsmooth_test_metrics.tsv";
    write_metrics(path.string(), records);
    const std::vector<MetricsRecord> parsed = parse_metrics(path.string());
    REQUIRE(parsed.size() == records.size());
    for (std::size_t i = 0; i < parsed.size(); ++i) {
        CHECK(parsed[i].method == records[i].method);
        CHECK(parsed[i].seed == records[i].seed);
        CHECK(parsed[i].epoch == records[i].epoch);
        CHECK(parsed[i].loss == records[i].loss);
        CHECK(parsed[i].accuracy == records[i].accuracy);
        CHECK(parsed[i].seconds == records[i].seconds);
        CHECK(parsed[i].forward_count == records[i].forward_count);
    }
    fs::remove(path);
}

TEST_CASE("run_comparison emits one row per method and seed") {
    const Fixture& f = fixture();
    ComparisonConfig cmp;
    cmp.teacher_config = f.teacher_config;
    cmp.student_config = f.student_config;
    cmp.train = quick_train(0);
    cmp.train.epochs = 1;
    cmp.smooth.lambda = 0.5;
    cmp.seeds = {1, 2};
    const ComparisonReport report = run_comparison(
        f.task.corpus, f.task.vocab, f.task.train, f.task.test, cmp, &f.teacher);
    CHECK(report.errors.empty());
    REQUIRE(report.rows.size() == 6);
    long textsmooth_rows = 0;
    for (const ComparisonRow& row : report.rows) {
        if (row.method == "textsmooth") {
            ++textsmooth_rows;
            CHECK(row.teacher_forward_count == f.task.train.size());
        }
    }
    CHECK(textsmooth_rows == 2);
    CHECK(report.smoothing_forwards == f.task.train.size());
    CHECK(report.summaries.size() == 3);
    const std::string table = format_comparison_table(report);
    CHECK(table.find("textsmooth") != std::string::npos);
    CHECK(table.find("bert_small") != std::string::npos);
    CHECK(table.find("soft_label_kd") != std::string::npos);
}
