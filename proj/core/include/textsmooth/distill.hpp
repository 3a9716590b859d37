#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "textsmooth/adam.hpp"
#include "textsmooth/data.hpp"
#include "textsmooth/model.hpp"
#include "textsmooth/smoothing.hpp"

namespace textsmooth {

struct TrainConfig {
    int epochs = 0;
    int batch_size = 0;
    double learning_rate = 0.0;
    std::uint64_t seed = 0;
    double mlm_mask_prob = 0.15; // teacher pretraining only
    double kd_temperature = 2.0; // soft-label baseline only
    double kd_alpha = 0.5;       // soft-label baseline only

    void validate(bool for_kd = false) const;
};

struct MetricsReport {
    std::string method;
    std::uint64_t seed = 0;
    std::vector<double> epoch_loss;
    std::vector<double> epoch_seconds;
    // Test accuracy after each epoch; NaN when no eval set was supplied.
    std::vector<double> epoch_accuracy;
    std::vector<double> step_losses;
    double final_accuracy = std::numeric_limits<double>::quiet_NaN();
    std::uint64_t teacher_forward_count = 0;
};

struct EvalResult {
    double accuracy = 0.0;
    std::vector<long> per_class_correct;
    std::vector<long> per_class_total;
};

// Standard masked-language pretraining: mlm_mask_prob of the non-special
// real positions are selected per instance; of those 80% become [MASK], 10%
// a random non-reserved token, 10% stay unchanged. Loss is cross-entropy on
// the selected positions only. A step with zero selected positions anywhere
// in the batch is skipped without a parameter update.
TransformerParams pretrain_mlm(const ModelConfig& config,
                               const std::vector<std::string>& corpus,
                               const Vocabulary& vocab, const TrainConfig& cfg,
                               MetricsReport* report = nullptr,
                               const std::vector<std::string>* eval_corpus = nullptr);

// Top-1 recovery of [MASK]-substituted positions under a deterministic
// masking of the given corpus; the held-out score for pretraining.
double mlm_recovery_accuracy(const TransformerParams& params,
                             const std::vector<std::string>& corpus,
                             const Vocabulary& vocab, std::uint64_t seed);

// Text-smoothing student training: distribution-form inputs, cross-entropy
// against the hard labels.
MetricsReport train_student(TransformerParams& student,
                            const std::vector<SmoothedInstance>& smoothed,
                            const TrainConfig& cfg, const Dataset* eval_set = nullptr);

// Direct fine-tuning on the raw data (id-form inputs); the no-distillation
// ablation. Identical to train_student when the smoothed data has lambda 1.
MetricsReport finetune_baseline(TransformerParams& student, const Dataset& data,
                                const TrainConfig& cfg, const Dataset* eval_set = nullptr);

// Plain logit distillation: kd_alpha * CE(student/T, softmax(teacher/T)) +
// (1 - kd_alpha) * CE(student, hard label). The teacher must carry a
// task-fine-tuned classification head.
MetricsReport soft_label_kd(const TransformerParams& teacher_clf,
                            TransformerParams& student, const Dataset& data,
                            const TrainConfig& cfg, const Dataset* eval_set = nullptr);

// Inference only: id-form (one-hot) inputs, dropout off, argmax prediction.
EvalResult evaluate(const TransformerParams& params, const Dataset& test);

// ---- metrics records (line-delimited TSV) ----

struct MetricsRecord {
    std::string method;
    std::uint64_t seed = 0;
    int epoch = 0;
    double loss = 0.0;
    double accuracy = 0.0;
    double seconds = 0.0; // timing field, excluded from determinism checks
    std::uint64_t forward_count = 0;
};

std::vector<MetricsRecord> to_records(const MetricsReport& report);
void write_metrics(const std::string& path, const std::vector<MetricsRecord>& records);
std::vector<MetricsRecord> parse_metrics(const std::string& path);

// ---- the Table-1 style comparison ----

struct ComparisonConfig {
    ModelConfig teacher_config;
    ModelConfig student_config;
    TrainConfig pretrain;
    TrainConfig train;
    SmoothingConfig smooth;
    std::vector<std::uint64_t> seeds;
};

struct ComparisonRow {
    std::string method;
    std::uint64_t seed = 0;
    double accuracy = 0.0;
    double mean_epoch_seconds = 0.0;
    std::uint64_t teacher_forward_count = 0;
};

struct MethodSummary {
    std::string method;
    double mean_accuracy = 0.0;
    double stddev_accuracy = 0.0;
    double mean_epoch_seconds = 0.0;
};

struct ComparisonReport {
    std::vector<ComparisonRow> rows;
    std::vector<MetricsReport> reports;
    std::vector<MethodSummary> summaries;
    std::vector<std::string> errors; // one entry per failed (method, seed) run
    std::uint64_t smoothing_forwards = 0;
    std::uint64_t n_train = 0;
    std::uint64_t teacher_checksum = 0; // identical before and after by contract
};

// Pretrains the teacher once (or reuses the one given), smooths the train
// set once, then runs TextSmooth, the BERT_small ablation and soft-label KD
// for every seed. The smoothing teacher is never fine-tuned; its checksum is
// verified unchanged across the whole run.
ComparisonReport run_comparison(const std::vector<std::string>& corpus,
                                const Vocabulary& vocab, const Dataset& train,
                                const Dataset& test, const ComparisonConfig& cfg,
                                const TransformerParams* pretrained_teacher = nullptr,
                                MetricsReport* pretrain_report = nullptr);

std::string format_comparison_table(const ComparisonReport& report);

} // namespace textsmooth
