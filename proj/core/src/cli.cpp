#include "textsmooth/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "textsmooth/checkpoint.hpp"
#include "textsmooth/config.hpp"
#include "textsmooth/distill.hpp"
#include "textsmooth/errors.hpp"
#include "textsmooth/io_util.hpp"
#include "textsmooth/sampler.hpp"

namespace textsmooth {

namespace fs = std::filesystem;

namespace {

struct OutputLayout {
    fs::path root, checkpoints, caches, metrics, reports;
};

OutputLayout make_layout(const std::string& output_dir) {
    OutputLayout out;
    out.root = output_dir;
    out.checkpoints = out.root / "checkpoints";
    out.caches = out.root / "caches";
    out.metrics = out.root / "metrics";
    out.reports = out.root / "reports";
    for (const fs::path& p : {out.root, out.checkpoints, out.caches, out.metrics, out.reports}) {
        fs::create_directories(p);
    }
    return out;
}

std::string lambda_tag(double lambda) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", lambda);
    return buf;
}

fs::path teacher_ckpt_path(const OutputLayout& out) {
    return out.checkpoints / "teacher_mlm.ckpt";
}

fs::path cache_path(const OutputLayout& out, double lambda) {
    return out.caches / ("train_lambda" + lambda_tag(lambda) + ".cache");
}

Checkpoint load_teacher(const OutputLayout& out) {
    const fs::path path = teacher_ckpt_path(out);
    if (!fs::exists(path)) {
        throw IoError("teacher checkpoint not found: " + path.string() +
                      " (run the pretrain command first)");
    }
    return load_checkpoint(path.string());
}

void check_vocab_match(const Vocabulary& a, const Vocabulary& b, const std::string& what) {
    if (a.tokens() != b.tokens()) {
        throw ConfigError(what + ": checkpoint vocabulary does not match the "
                          "vocabulary derived from the configured data");
    }
}

void write_step_losses(const fs::path& path, const MetricsReport& report) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    char buf[40];
    for (double loss : report.step_losses) {
        std::snprintf(buf, sizeof(buf), "%.17g", loss);
        out << buf << '\n';
    }
}

struct ParsedArgs {
    std::string config_path;
    std::map<std::string, std::string> kv;
};

ParsedArgs load_args(const std::vector<std::string>& args) {
    if (args.empty()) {
        throw ConfigError("missing config file path");
    }
    ParsedArgs parsed;
    parsed.config_path = args[0];
    parsed.kv = parse_config_file(parsed.config_path);
    apply_overrides(parsed.kv, std::vector<std::string>(args.begin() + 1, args.end()));
    return parsed;
}

void print_epoch_lines(const MetricsReport& report) {
    for (std::size_t e = 0; e < report.epoch_loss.size(); ++e) {
        std::printf("epoch %zu  loss %.6f", e, report.epoch_loss[e]);
        if (e < report.epoch_accuracy.size() && report.epoch_accuracy[e] == report.epoch_accuracy[e]) {
            std::printf("  accuracy %.4f", report.epoch_accuracy[e]);
        }
        if (e < report.epoch_seconds.size()) {
            std::printf("  (%.2fs)", report.epoch_seconds[e]);
        }
        std::printf("\n");
    }
}

int cmd_pretrain(const ExperimentConfig& cfg) {
    const OutputLayout out = make_layout(cfg.output_dir);
    const LoadedExperiment exp = load_experiment(cfg);
    MetricsReport report;
    const TransformerParams teacher =
        pretrain_mlm(exp.teacher_config, exp.pretrain_corpus, exp.vocab, cfg.pretrain,
                     &report, exp.eval_corpus.empty() ? nullptr : &exp.eval_corpus);
    print_epoch_lines(report);
    const fs::path path = teacher_ckpt_path(out);
    save_checkpoint(path.string(), teacher, exp.vocab);
    write_metrics((out.metrics / "pretrain.tsv").string(), to_records(report));
    std::printf("teacher checkpoint: %s (checksum %016llx)\n", path.string().c_str(),
                static_cast<unsigned long long>(params_checksum(teacher)));
    return 0;
}

int cmd_smooth(const ExperimentConfig& cfg) {
    cfg.smooth.validate();
    const OutputLayout out = make_layout(cfg.output_dir);
    const LoadedExperiment exp = load_experiment(cfg);
    const Checkpoint teacher = load_teacher(out);
    check_vocab_match(teacher.vocab, exp.vocab, "smooth");
    const std::uint64_t teacher_sum = params_checksum(teacher.params);
    const fs::path path = cache_path(out, cfg.smooth.lambda);

    if (fs::exists(path)) {
        const SmoothedCache existing = load_smoothed_cache(path.string());
        if (existing.teacher_checksum == teacher_sum &&
            existing.config.lambda == cfg.smooth.lambda &&
            existing.config.exempt_special_tokens == cfg.smooth.exempt_special_tokens &&
            existing.result.instances.size() == exp.train.instances.size()) {
            std::printf("cache hit: %s\n", path.string().c_str());
            std::printf("lambda %g  teacher forwards %llu (N = %zu)\n",
                        existing.config.lambda,
                        static_cast<unsigned long long>(existing.result.teacher_forwards),
                        exp.train.instances.size());
            return 0;
        }
    }
    const SmoothResult result = smooth_dataset(teacher.params, exp.train, cfg.smooth);
    save_smoothed_cache(path.string(), result, cfg.smooth, teacher_sum,
                        exp.vocab.size());
    if (params_checksum(teacher.params) != teacher_sum) {
        throw ContractError("smooth: teacher parameters changed during smoothing");
    }
    std::printf("smoothed cache: %s\n", path.string().c_str());
    std::printf("lambda %g  teacher forwards %llu (N = %zu)\n", cfg.smooth.lambda,
                static_cast<unsigned long long>(result.teacher_forwards),
                exp.train.instances.size());
    return 0;
}

int train_command(const ExperimentConfig& cfg, const std::string& method) {
    const OutputLayout out = make_layout(cfg.output_dir);
    const LoadedExperiment exp = load_experiment(cfg);
    const Checkpoint teacher = load_teacher(out);
    check_vocab_match(teacher.vocab, exp.vocab, method);

    TransformerParams student =
        init_student_from_teacher(teacher.params, exp.student_config, cfg.train.seed);
    MetricsReport report;
    if (method == "distill") {
        const fs::path cpath = cache_path(out, cfg.smooth.lambda);
        if (!fs::exists(cpath)) {
            throw IoError("smoothed cache not found: " + cpath.string() +
                          " (run the smooth command first)");
        }
        const SmoothedCache cache = load_smoothed_cache(cpath.string());
        if (cache.teacher_checksum != params_checksum(teacher.params)) {
            throw ConfigError("distill: cache was built with a different teacher "
                              "checkpoint; rerun the smooth command");
        }
        report = train_student(student, cache.result.instances, cfg.train, &exp.test);
        report.teacher_forward_count = cache.result.teacher_forwards;
    } else if (method == "finetune") {
        report = finetune_baseline(student, exp.train, cfg.train, &exp.test);
    } else { // kd
        TransformerParams kd_teacher = teacher.params;
        TrainConfig teacher_cfg = cfg.train;
        teacher_cfg.seed = mix64(cfg.train.seed, 0xF17eULL);
        finetune_baseline(kd_teacher, exp.train, teacher_cfg);
        save_checkpoint((out.checkpoints / ("teacher_clf_seed" +
                                            std::to_string(cfg.train.seed) + ".ckpt"))
                            .string(),
                        kd_teacher, exp.vocab);
        report = soft_label_kd(kd_teacher, student, exp.train, cfg.train, &exp.test);
    }
    print_epoch_lines(report);
    const std::string tag = report.method + "_seed" + std::to_string(cfg.train.seed);
    save_checkpoint((out.checkpoints / ("student_" + tag + ".ckpt")).string(), student,
                    exp.vocab);
    write_metrics((out.metrics / (tag + ".tsv")).string(), to_records(report));
    write_step_losses(out.metrics / (tag + "_steps.txt"), report);
    const EvalResult final_eval = evaluate(student, exp.test);
    std::printf("final accuracy %.4f\n", final_eval.accuracy);
    return 0;
}

int cmd_sample(const ExperimentConfig& cfg) {
    const OutputLayout out = make_layout(cfg.output_dir);
    const LoadedExperiment exp = load_experiment(cfg);
    const Checkpoint teacher = load_teacher(out);
    check_vocab_match(teacher.vocab, exp.vocab, "sample");

    std::vector<std::string> texts;
    if (!cfg.sample_text.empty()) {
        texts.push_back(cfg.sample_text);
    } else if (!cfg.sample_input.empty()) {
        std::ifstream in(cfg.sample_input);
        if (!in) {
            throw IoError("cannot open sample input file: " + cfg.sample_input);
        }
        std::string line;
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (!line.empty()) texts.push_back(line);
        }
    } else {
        const int n = std::min<int>(cfg.sample_count,
                                    static_cast<int>(exp.test.texts_a.size()));
        texts.assign(exp.test.texts_a.begin(), exp.test.texts_a.begin() + n);
    }

    std::string full_report;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        const EncodedInstance inst = encode_instance(texts[i], std::nullopt, 0,
                                                     teacher.vocab, cfg.max_seq_len);
        const Tensor dist = mlm_distribution(teacher.params, inst);
        const SmoothedInstance smoothed = smooth_text(inst, dist, cfg.smooth);
        const std::vector<SampledSentence> top =
            top_sentences(smoothed, teacher.vocab, cfg.sample_n_samples,
                          cfg.sample_n_report, mix64(cfg.sample_seed, i));
        full_report += render_report_block(texts[i], top);
        if (i + 1 < texts.size()) {
            full_report += '\n';
        }
    }
    std::fputs(full_report.c_str(), stdout);
    std::ofstream rep(out.reports / "samples.txt");
    rep << full_report;
    return 0;
}

int cmd_compare(const ExperimentConfig& cfg) {
    const OutputLayout out = make_layout(cfg.output_dir);
    const LoadedExperiment exp = load_experiment(cfg);

    ComparisonConfig cmp;
    cmp.teacher_config = exp.teacher_config;
    cmp.student_config = exp.student_config;
    cmp.pretrain = cfg.pretrain;
    cmp.train = cfg.train;
    cmp.smooth = cfg.smooth;
    cmp.seeds = cfg.seed_list;

    // Reuse an existing teacher checkpoint when one is present.
    const fs::path tpath = teacher_ckpt_path(out);
    TransformerParams teacher;
    bool have_teacher = false;
    if (fs::exists(tpath)) {
        Checkpoint ckpt = load_checkpoint(tpath.string());
        check_vocab_match(ckpt.vocab, exp.vocab, "compare");
        teacher = std::move(ckpt.params);
        have_teacher = true;
        std::printf("reusing teacher checkpoint %s\n", tpath.string().c_str());
    } else {
        MetricsReport pre_report;
        teacher = pretrain_mlm(exp.teacher_config, exp.pretrain_corpus, exp.vocab,
                               cfg.pretrain, &pre_report,
                               exp.eval_corpus.empty() ? nullptr : &exp.eval_corpus);
        save_checkpoint(tpath.string(), teacher, exp.vocab);
        write_metrics((out.metrics / "pretrain.tsv").string(), to_records(pre_report));
        have_teacher = true;
    }
    (void)have_teacher;

    const ComparisonReport report =
        run_comparison(exp.pretrain_corpus, exp.vocab, exp.train, exp.test, cmp, &teacher);

    std::vector<MetricsRecord> all_records;
    for (const MetricsReport& r : report.reports) {
        const std::vector<MetricsRecord> recs = to_records(r);
        all_records.insert(all_records.end(), recs.begin(), recs.end());
    }
    write_metrics((out.metrics / "comparison.tsv").string(), all_records);

    const std::string table = format_comparison_table(report);
    std::fputs(table.c_str(), stdout);
    std::printf("smoothing teacher forwards: %llu (N = %llu)\n",
                static_cast<unsigned long long>(report.smoothing_forwards),
                static_cast<unsigned long long>(report.n_train));
    std::ofstream rep(out.reports / "comparison.txt");
    rep << table;

    if (!report.errors.empty()) {
        std::fprintf(stderr, "%zu run(s) failed\n", report.errors.size());
        return 2;
    }
    return 0;
}

} // namespace

std::string cli_usage() {
    return "usage: textsmooth <command> <config-file> [--key value ...]\n"
           "\n"
           "commands:\n"
           "  pretrain   train the teacher masked language model, write its checkpoint\n"
           "  smooth     precompute the smoothed training corpus cache\n"
           "  distill    train a student on the smoothed cache (text smoothing)\n"
           "  finetune   train a student directly on the raw data (ablation)\n"
           "  kd         train a student with soft-label distillation (baseline)\n"
           "  sample     draw ranked fake sentences from smoothed inputs\n"
           "  compare    run all three methods over the seed list and summarize\n"
           "\n"
           "Any config key can be overridden, e.g. --smooth.lambda 0.25\n";
}

int run_cli(const std::vector<std::string>& args) {
    if (args.empty() || args[0] == "-h" || args[0] == "--help" || args[0] == "help") {
        std::fputs(cli_usage().c_str(), stdout);
        return args.empty() ? 1 : 0;
    }
    const std::string command = args[0];
    const bool known = command == "pretrain" || command == "smooth" ||
                       command == "distill" || command == "finetune" ||
                       command == "kd" || command == "sample" || command == "compare";
    if (!known) {
        std::fprintf(stderr, "unknown command '%s'\n%s", command.c_str(),
                     cli_usage().c_str());
        return 1;
    }
    try {
        const ParsedArgs parsed = load_args({args.begin() + 1, args.end()});
        const ExperimentConfig cfg = validate_experiment_config(parsed.kv);
        if (command == "pretrain") return cmd_pretrain(cfg);
        if (command == "smooth") return cmd_smooth(cfg);
        if (command == "distill") return train_command(cfg, "distill");
        if (command == "finetune") return train_command(cfg, "finetune");
        if (command == "kd") return train_command(cfg, "kd");
        if (command == "sample") return cmd_sample(cfg);
        return cmd_compare(cfg);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}

} // namespace textsmooth
