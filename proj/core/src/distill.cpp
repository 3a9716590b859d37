#include "textsmooth/distill.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "textsmooth/autodiff.hpp"
#include "textsmooth/errors.hpp"
#include "textsmooth/rng.hpp"

namespace textsmooth {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

// stream salts
constexpr std::uint64_t kShuffleSalt = 0x5487u;
constexpr std::uint64_t kDropoutSalt = 0xD407u;
constexpr std::uint64_t kMaskSalt = 0x3a5cu;
constexpr std::uint64_t kKdTeacherSalt = 0xF17eu;

Tensor one_hot_row(int index, int width) {
    Tensor t({1, width});
    t[static_cast<std::size_t>(index)] = 1.0;
    return t;
}

Value sum_losses(const std::vector<Value>& losses) {
    Value total = losses.front();
    for (std::size_t i = 1; i < losses.size(); ++i) {
        total = add(total, losses[i]);
    }
    return total;
}

struct KdSignal {
    double temperature = 1.0;
    double alpha = 0.0;
    std::vector<Tensor> teacher_probs; // softmax(teacher logits / T), per instance
};

// Shared training loop for train_student / finetune_baseline / soft_label_kd.
// The three entry points differ only in input form and loss mixture, which
// is what makes the lambda=1 equivalence hold step for step.
MetricsReport run_training(TransformerParams& params, std::size_t n_instances,
                           const EncodedInstance* (*enc_at)(const void*, std::size_t),
                           const SmoothedInstance* (*smo_at)(const void*, std::size_t),
                           const void* data, const TrainConfig& cfg,
                           const KdSignal* kd, const Dataset* eval_set,
                           std::string method) {
    cfg.validate(kd != nullptr);
    if (n_instances == 0) {
        throw ContractError(method + ": empty training data");
    }
    const ModelConfig& mc = params.config;
    MetricsReport report;
    report.method = std::move(method);
    report.seed = cfg.seed;

    AdamState adam(AdamConfig{cfg.learning_rate, 0.9, 0.999, 1e-8});
    std::vector<Tensor*> param_ptrs = params.param_list();
    const int n = static_cast<int>(n_instances);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto t0 = Clock::now();
        Rng shuffle_rng(mix64(cfg.seed, kShuffleSalt, static_cast<std::uint64_t>(epoch)));
        const std::vector<int> order = permutation(n, shuffle_rng);
        double epoch_loss_sum = 0.0;
        int epoch_steps = 0;
        int step = 0;
        for (int start = 0; start < n; start += cfg.batch_size, ++step) {
            const int end = std::min(n, start + cfg.batch_size);
            Tape tape;
            LiftedParams lp = lift_params(tape, params, /*trainable=*/true);
            std::vector<Value> losses;
            for (int slot = 0; start + slot < end; ++slot) {
                const std::size_t idx = static_cast<std::size_t>(order[static_cast<std::size_t>(start + slot)]);
                Rng dropout_rng(mix64(cfg.seed, kDropoutSalt,
                                      static_cast<std::uint64_t>(epoch) * 1000003ULL +
                                          static_cast<std::uint64_t>(step),
                                      static_cast<std::uint64_t>(slot)));
                Value emb;
                const std::vector<int>* attn_mask;
                int label;
                if (smo_at) {
                    const SmoothedInstance* si = smo_at(data, idx);
                    emb = embed_input(tape, lp, si->distributions, si->segment_ids);
                    attn_mask = &si->attention_mask;
                    label = si->label;
                } else {
                    const EncodedInstance* ei = enc_at(data, idx);
                    emb = embed_input(tape, lp, ei->token_ids, ei->segment_ids);
                    attn_mask = &ei->attention_mask;
                    label = ei->label;
                }
                Value hidden = forward_encoder(tape, lp, emb, *attn_mask,
                                               /*training=*/true, &dropout_rng);
                Value logits = classify(tape, lp, hidden);
                Value ce = cross_entropy(logits, one_hot_row(label, mc.n_labels));
                if (kd) {
                    Value soft_logits = scale(logits, 1.0 / kd->temperature);
                    Value kd_ce = cross_entropy(soft_logits, kd->teacher_probs[idx]);
                    ce = add(scale(kd_ce, kd->alpha), scale(ce, 1.0 - kd->alpha));
                }
                losses.push_back(ce);
            }
            Value loss = scale(sum_losses(losses), 1.0 / static_cast<double>(losses.size()));
            tape.backward(loss);
            adam_step(param_ptrs, lp.grad_list(), adam);
            const double loss_value = loss.val()[0];
            report.step_losses.push_back(loss_value);
            epoch_loss_sum += loss_value;
            ++epoch_steps;
        }
        report.epoch_loss.push_back(epoch_steps ? epoch_loss_sum / epoch_steps : 0.0);
        report.epoch_seconds.push_back(seconds_since(t0));
        if (eval_set) {
            report.epoch_accuracy.push_back(evaluate(params, *eval_set).accuracy);
        } else {
            report.epoch_accuracy.push_back(std::numeric_limits<double>::quiet_NaN());
        }
    }
    if (!params.all_finite()) {
        throw NumericError(report.method + ": non-finite parameters after training");
    }
    if (eval_set) {
        report.final_accuracy = report.epoch_accuracy.empty()
                                    ? evaluate(params, *eval_set).accuracy
                                    : report.epoch_accuracy.back();
    }
    return report;
}

} // namespace

void TrainConfig::validate(bool for_kd) const {
    std::string err;
    auto fail = [&](const std::string& m) { err += (err.empty() ? "" : "; ") + m; };
    if (epochs < 1) fail("epochs must be positive");
    if (batch_size < 1) fail("batch_size must be positive");
    if (!(learning_rate > 0.0)) fail("learning_rate must be positive");
    if (!(mlm_mask_prob >= 0.0 && mlm_mask_prob <= 1.0)) fail("mlm_mask_prob must be in [0,1]");
    if (for_kd) {
        if (!(kd_temperature > 0.0)) fail("kd_temperature must be positive");
        if (!(kd_alpha >= 0.0 && kd_alpha <= 1.0)) fail("kd_alpha must be in [0,1]");
    }
    if (!err.empty()) {
        throw ConfigError("invalid train config: " + err);
    }
}

// ---- MLM pretraining ----

namespace {

std::vector<int> eligible_positions(const EncodedInstance& inst) {
    std::vector<int> out;
    for (int i = 0; i < inst.seq_len(); ++i) {
        const int tok = inst.token_ids[static_cast<std::size_t>(i)];
        if (inst.attention_mask[static_cast<std::size_t>(i)] == 1 &&
            tok != Vocabulary::cls_id && tok != Vocabulary::sep_id) {
            out.push_back(i);
        }
    }
    return out;
}

struct MaskedView {
    std::vector<int> corrupted_ids;
    std::vector<int> selected;    // positions contributing to the loss
    std::vector<int> true_tokens; // original ids at those positions
};

MaskedView apply_mlm_corruption(const EncodedInstance& inst, double mask_prob,
                                int vocab_size, Rng& rng) {
    MaskedView view;
    view.corrupted_ids = inst.token_ids;
    for (int pos : eligible_positions(inst)) {
        if (!rng.bernoulli(mask_prob)) {
            continue;
        }
        view.selected.push_back(pos);
        view.true_tokens.push_back(inst.token_ids[static_cast<std::size_t>(pos)]);
        const double r = rng.uniform();
        if (r < 0.8) {
            view.corrupted_ids[static_cast<std::size_t>(pos)] = Vocabulary::mask_id;
        } else if (r < 0.9) {
            const int span = vocab_size - Vocabulary::num_reserved;
            view.corrupted_ids[static_cast<std::size_t>(pos)] =
                Vocabulary::num_reserved + (span > 0 ? rng.uniform_int(span) : 0);
        } // else keep the original token
    }
    return view;
}

} // namespace

TransformerParams pretrain_mlm(const ModelConfig& config,
                               const std::vector<std::string>& corpus,
                               const Vocabulary& vocab, const TrainConfig& cfg,
                               MetricsReport* report,
                               const std::vector<std::string>* eval_corpus) {
    config.validate();
    cfg.validate();
    if (corpus.empty()) {
        throw ContractError("pretrain_mlm: empty corpus");
    }
    if (vocab.size() != config.vocab_size) {
        throw ConfigError("pretrain_mlm: vocab size " + std::to_string(vocab.size()) +
                          " != config vocab_size " + std::to_string(config.vocab_size));
    }
    std::vector<EncodedInstance> instances;
    instances.reserve(corpus.size());
    for (const std::string& text : corpus) {
        instances.push_back(encode_instance(text, std::nullopt, 0, vocab, config.max_seq_len));
    }

    TransformerParams params = init_params(config, cfg.seed);
    AdamState adam(AdamConfig{cfg.learning_rate, 0.9, 0.999, 1e-8});
    std::vector<Tensor*> param_ptrs = params.param_list();
    const int n = static_cast<int>(instances.size());

    MetricsReport local;
    local.method = "pretrain_mlm";
    local.seed = cfg.seed;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto t0 = Clock::now();
        Rng shuffle_rng(mix64(cfg.seed, kShuffleSalt, static_cast<std::uint64_t>(epoch)));
        const std::vector<int> order = permutation(n, shuffle_rng);
        double epoch_loss_sum = 0.0;
        int epoch_steps = 0;
        int step = 0;
        for (int start = 0; start < n; start += cfg.batch_size, ++step) {
            const int end = std::min(n, start + cfg.batch_size);
            Tape tape;
            LiftedParams lp = lift_params(tape, params, /*trainable=*/true);
            std::vector<Value> losses;
            for (int slot = 0; start + slot < end; ++slot) {
                const EncodedInstance& inst =
                    instances[static_cast<std::size_t>(order[static_cast<std::size_t>(start + slot)])];
                Rng mask_rng(mix64(cfg.seed, kMaskSalt,
                                   static_cast<std::uint64_t>(epoch) * 1000003ULL +
                                       static_cast<std::uint64_t>(step),
                                   static_cast<std::uint64_t>(slot)));
                const MaskedView view =
                    apply_mlm_corruption(inst, cfg.mlm_mask_prob, config.vocab_size, mask_rng);
                if (view.selected.empty()) {
                    continue;
                }
                Rng dropout_rng(mix64(cfg.seed, kDropoutSalt,
                                      static_cast<std::uint64_t>(epoch) * 1000003ULL +
                                          static_cast<std::uint64_t>(step),
                                      static_cast<std::uint64_t>(slot)));
                Value emb = embed_input(tape, lp, view.corrupted_ids, inst.segment_ids);
                Value hidden = forward_encoder(tape, lp, emb, inst.attention_mask,
                                               /*training=*/true, &dropout_rng);
                Value picked = take_rows(hidden, view.selected);
                Value logits = mlm_logits(tape, lp, picked);
                Tensor targets({static_cast<int>(view.selected.size()), config.vocab_size});
                for (std::size_t r = 0; r < view.true_tokens.size(); ++r) {
                    targets.at(static_cast<int>(r), view.true_tokens[r]) = 1.0;
                }
                losses.push_back(cross_entropy(logits, std::move(targets)));
            }
            if (losses.empty()) {
                continue; // skip-step: nothing was selected anywhere in the batch
            }
            Value loss = scale(sum_losses(losses), 1.0 / static_cast<double>(losses.size()));
            tape.backward(loss);
            adam_step(param_ptrs, lp.grad_list(), adam);
            const double loss_value = loss.val()[0];
            local.step_losses.push_back(loss_value);
            epoch_loss_sum += loss_value;
            ++epoch_steps;
        }
        local.epoch_loss.push_back(epoch_steps ? epoch_loss_sum / epoch_steps : 0.0);
        local.epoch_seconds.push_back(seconds_since(t0));
        if (eval_corpus) {
            local.epoch_accuracy.push_back(
                mlm_recovery_accuracy(params, *eval_corpus, vocab, cfg.seed));
        } else {
            local.epoch_accuracy.push_back(std::numeric_limits<double>::quiet_NaN());
        }
    }
    if (!params.all_finite()) {
        throw NumericError("pretrain_mlm: non-finite parameters after training");
    }
    if (!local.epoch_accuracy.empty() && eval_corpus) {
        local.final_accuracy = local.epoch_accuracy.back();
    }
    if (report) {
        *report = std::move(local);
    }
    return params;
}

double mlm_recovery_accuracy(const TransformerParams& params,
                             const std::vector<std::string>& corpus,
                             const Vocabulary& vocab, std::uint64_t seed) {
    const ModelConfig& c = params.config;
    long correct = 0, total = 0;
    for (std::size_t idx = 0; idx < corpus.size(); ++idx) {
        const EncodedInstance inst =
            encode_instance(corpus[idx], std::nullopt, 0, vocab, c.max_seq_len);
        Rng rng(mix64(seed, 0xE7a1ULL, idx));
        std::vector<int> masked;
        std::vector<int> truth;
        std::vector<int> corrupted = inst.token_ids;
        for (int pos : eligible_positions(inst)) {
            if (rng.bernoulli(0.15)) {
                masked.push_back(pos);
                truth.push_back(inst.token_ids[static_cast<std::size_t>(pos)]);
                corrupted[static_cast<std::size_t>(pos)] = Vocabulary::mask_id;
            }
        }
        if (masked.empty()) {
            continue;
        }
        Tape tape;
        LiftedParams lp = lift_params(tape, params, /*trainable=*/false);
        Value emb = embed_input(tape, lp, corrupted, inst.segment_ids);
        Value hidden = forward_encoder(tape, lp, emb, inst.attention_mask, false);
        Value logits = mlm_logits(tape, lp, take_rows(hidden, masked));
        const Tensor& lg = logits.val();
        for (std::size_t r = 0; r < masked.size(); ++r) {
            int best = 0;
            const double* row = lg.row_ptr(static_cast<int>(r));
            for (int j = 1; j < lg.cols(); ++j) {
                if (row[j] > row[best]) {
                    best = j;
                }
            }
            if (best == truth[r]) {
                ++correct;
            }
            ++total;
        }
    }
    return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
}

// ---- student training entry points ----

MetricsReport train_student(TransformerParams& student,
                            const std::vector<SmoothedInstance>& smoothed,
                            const TrainConfig& cfg, const Dataset* eval_set) {
    if (!smoothed.empty() &&
        smoothed.front().distributions.cols() != student.config.vocab_size) {
        throw ConfigError("train_student: smoothed vocab " +
                          std::to_string(smoothed.front().distributions.cols()) +
                          " != student vocab " + std::to_string(student.config.vocab_size));
    }
    return run_training(
        student, smoothed.size(), nullptr,
        [](const void* d, std::size_t i) -> const SmoothedInstance* {
            return &(*static_cast<const std::vector<SmoothedInstance>*>(d))[i];
        },
        &smoothed, cfg, nullptr, eval_set, "textsmooth");
}

MetricsReport finetune_baseline(TransformerParams& student, const Dataset& data,
                                const TrainConfig& cfg, const Dataset* eval_set) {
    return run_training(
        student, data.instances.size(),
        [](const void* d, std::size_t i) -> const EncodedInstance* {
            return &(*static_cast<const std::vector<EncodedInstance>*>(d))[i];
        },
        nullptr, &data.instances, cfg, nullptr, eval_set, "bert_small");
}

MetricsReport soft_label_kd(const TransformerParams& teacher_clf,
                            TransformerParams& student, const Dataset& data,
                            const TrainConfig& cfg, const Dataset* eval_set) {
    cfg.validate(/*for_kd=*/true);
    if (teacher_clf.config.n_labels != student.config.n_labels) {
        throw ConfigError("soft_label_kd: teacher classification head has " +
                          std::to_string(teacher_clf.config.n_labels) +
                          " labels, student expects " +
                          std::to_string(student.config.n_labels));
    }
    if (teacher_clf.config.vocab_size != student.config.vocab_size) {
        throw ConfigError("soft_label_kd: teacher/student vocabulary mismatch");
    }
    KdSignal kd;
    kd.temperature = cfg.kd_temperature;
    kd.alpha = cfg.kd_alpha;
    kd.teacher_probs.reserve(data.instances.size());
    ForwardStats stats;
    for (const EncodedInstance& inst : data.instances) {
        Tape tape;
        LiftedParams lp = lift_params(tape, teacher_clf, /*trainable=*/false);
        Value emb = embed_input(tape, lp, inst.token_ids, inst.segment_ids);
        Value hidden = forward_encoder(tape, lp, emb, inst.attention_mask,
                                       /*training=*/false, nullptr, &stats);
        Value logits = classify(tape, lp, hidden);
        kd.teacher_probs.push_back(softmax_rows(scale(logits, 1.0 / kd.temperature).val()));
    }
    MetricsReport report = run_training(
        student, data.instances.size(),
        [](const void* d, std::size_t i) -> const EncodedInstance* {
            return &(*static_cast<const std::vector<EncodedInstance>*>(d))[i];
        },
        nullptr, &data.instances, cfg, &kd, eval_set, "soft_label_kd");
    report.teacher_forward_count = stats.encoder_forwards.load();
    return report;
}

EvalResult evaluate(const TransformerParams& params, const Dataset& test) {
    EvalResult result;
    const std::size_t n_labels = static_cast<std::size_t>(params.config.n_labels);
    result.per_class_correct.assign(n_labels, 0);
    result.per_class_total.assign(n_labels, 0);
    long correct = 0;
    for (const EncodedInstance& inst : test.instances) {
        // one-hot (id-form) inputs only; smoothing never happens at inference
        Tape tape;
        LiftedParams lp = lift_params(tape, params, /*trainable=*/false);
        Value emb = embed_input(tape, lp, inst.token_ids, inst.segment_ids);
        Value hidden = forward_encoder(tape, lp, emb, inst.attention_mask, false);
        const Tensor logits = classify(tape, lp, hidden).val();
        int best = 0;
        for (int j = 1; j < logits.cols(); ++j) {
            if (logits.at(0, j) > logits.at(0, best)) {
                best = j;
            }
        }
        result.per_class_total[static_cast<std::size_t>(inst.label)] += 1;
        if (best == inst.label) {
            result.per_class_correct[static_cast<std::size_t>(inst.label)] += 1;
            ++correct;
        }
    }
    result.accuracy = test.instances.empty()
                          ? 0.0
                          : static_cast<double>(correct) /
                                static_cast<double>(test.instances.size());
    return result;
}

// ---- metrics records ----

namespace {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

std::vector<MetricsRecord> to_records(const MetricsReport& report) {
    std::vector<MetricsRecord> records;
    for (std::size_t e = 0; e < report.epoch_loss.size(); ++e) {
        MetricsRecord r;
        r.method = report.method;
        r.seed = report.seed;
        r.epoch = static_cast<int>(e);
        r.loss = report.epoch_loss[e];
        r.accuracy = e < report.epoch_accuracy.size()
                         ? report.epoch_accuracy[e]
                         : std::numeric_limits<double>::quiet_NaN();
        r.seconds = e < report.epoch_seconds.size() ? report.epoch_seconds[e] : 0.0;
        r.forward_count = report.teacher_forward_count;
        records.push_back(std::move(r));
    }
    return records;
}

void write_metrics(const std::string& path, const std::vector<MetricsRecord>& records) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write metrics file: " + path);
    }
    for (const MetricsRecord& r : records) {
        out << r.method << '\t' << r.seed << '\t' << r.epoch << '\t'
            << format_double(r.loss) << '\t' << format_double(r.accuracy) << '\t'
            << format_double(r.seconds) << '\t' << r.forward_count << '\n';
    }
}

std::vector<MetricsRecord> parse_metrics(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open metrics file: " + path);
    }
    std::vector<MetricsRecord> records;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        std::istringstream ss(line);
        MetricsRecord r;
        if (!(ss >> r.method >> r.seed >> r.epoch >> r.loss >> r.accuracy >>
              r.seconds >> r.forward_count)) {
            throw ParseError(path + ":" + std::to_string(line_no) +
                             ": malformed metrics record");
        }
        records.push_back(std::move(r));
    }
    return records;
}

// ---- comparison ----

namespace {

MethodSummary summarize(const std::string& method, const std::vector<ComparisonRow>& rows) {
    MethodSummary s;
    s.method = method;
    std::vector<double> accs;
    double secs = 0.0;
    for (const ComparisonRow& r : rows) {
        if (r.method == method) {
            accs.push_back(r.accuracy);
            secs += r.mean_epoch_seconds;
        }
    }
    if (accs.empty()) {
        return s;
    }
    const double mean = std::accumulate(accs.begin(), accs.end(), 0.0) /
                        static_cast<double>(accs.size());
    double var = 0.0;
    for (double a : accs) {
        var += (a - mean) * (a - mean);
    }
    var /= static_cast<double>(accs.size());
    s.mean_accuracy = mean;
    s.stddev_accuracy = std::sqrt(var);
    s.mean_epoch_seconds = secs / static_cast<double>(accs.size());
    return s;
}

} // namespace

ComparisonReport run_comparison(const std::vector<std::string>& corpus,
                                const Vocabulary& vocab, const Dataset& train,
                                const Dataset& test, const ComparisonConfig& cfg,
                                const TransformerParams* pretrained_teacher,
                                MetricsReport* pretrain_report) {
    ComparisonReport report;
    report.n_train = train.instances.size();

    TransformerParams teacher =
        pretrained_teacher
            ? *pretrained_teacher
            : pretrain_mlm(cfg.teacher_config, corpus, vocab, cfg.pretrain, pretrain_report);
    const std::uint64_t checksum_before = params_checksum(teacher);
    report.teacher_checksum = checksum_before;

    // Smoothing is precomputed exactly once; one teacher forward per instance.
    const SmoothResult smoothed = smooth_dataset(teacher, train, cfg.smooth);
    report.smoothing_forwards = smoothed.teacher_forwards;

    for (std::uint64_t seed : cfg.seeds) {
        TrainConfig train_cfg = cfg.train;
        train_cfg.seed = seed;
        const TransformerParams student0 =
            init_student_from_teacher(teacher, cfg.student_config, seed);

        auto run_one = [&](const std::string& method, auto&& fn) {
            try {
                TransformerParams student = student0;
                MetricsReport r = fn(student);
                r.seed = seed;
                ComparisonRow row;
                row.method = r.method;
                row.seed = seed;
                row.accuracy = evaluate(student, test).accuracy;
                row.mean_epoch_seconds =
                    r.epoch_seconds.empty()
                        ? 0.0
                        : std::accumulate(r.epoch_seconds.begin(), r.epoch_seconds.end(), 0.0) /
                              static_cast<double>(r.epoch_seconds.size());
                row.teacher_forward_count = r.teacher_forward_count;
                report.rows.push_back(row);
                report.reports.push_back(std::move(r));
            } catch (const std::exception& e) {
                report.errors.push_back(method + " seed " + std::to_string(seed) +
                                        ": " + e.what());
            }
        };

        run_one("textsmooth", [&](TransformerParams& student) {
            MetricsReport r = train_student(student, smoothed.instances, train_cfg, &test);
            r.teacher_forward_count = smoothed.teacher_forwards;
            return r;
        });
        run_one("bert_small", [&](TransformerParams& student) {
            return finetune_baseline(student, train, train_cfg, &test);
        });
        run_one("soft_label_kd", [&](TransformerParams& student) {
            // The KD teacher is a separate, task-fine-tuned artifact; the
            // smoothing teacher itself is never fine-tuned.
            TransformerParams kd_teacher = teacher;
            TrainConfig teacher_cfg = train_cfg;
            teacher_cfg.seed = mix64(seed, kKdTeacherSalt);
            finetune_baseline(kd_teacher, train, teacher_cfg);
            return soft_label_kd(kd_teacher, student, train, train_cfg, &test);
        });
    }

    if (params_checksum(teacher) != checksum_before) {
        throw ContractError("run_comparison: smoothing teacher was mutated");
    }
    for (const char* m : {"textsmooth", "bert_small", "soft_label_kd"}) {
        report.summaries.push_back(summarize(m, report.rows));
    }
    return report;
}

std::string format_comparison_table(const ComparisonReport& report) {
    std::ostringstream os;
    char buf[160];
    os << "method          seed        accuracy   sec/epoch   teacher_forwards\n";
    for (const ComparisonRow& r : report.rows) {
        std::snprintf(buf, sizeof(buf), "%-15s %-11llu %-10.4f %-11.3f %llu\n",
                      r.method.c_str(), static_cast<unsigned long long>(r.seed),
                      r.accuracy, r.mean_epoch_seconds,
                      static_cast<unsigned long long>(r.teacher_forward_count));
        os << buf;
    }
    os << "\nmethod          mean_acc   stddev     sec/epoch\n";
    for (const MethodSummary& s : report.summaries) {
        std::snprintf(buf, sizeof(buf), "%-15s %-10.4f %-10.4f %.3f\n", s.method.c_str(),
                      s.mean_accuracy, s.stddev_accuracy, s.mean_epoch_seconds);
        os << buf;
    }
    if (!report.errors.empty()) {
        os << "\nfailed runs:\n";
        for (const std::string& e : report.errors) {
            os << "  " << e << '\n';
        }
    }
    return os.str();
}

} // namespace textsmooth
