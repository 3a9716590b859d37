#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "textsmooth/distill.hpp"
#include "textsmooth/model.hpp"
#include "textsmooth/smoothing.hpp"
#include "textsmooth/synthetic.hpp"

namespace textsmooth {

// `key = value` lines, '#' comments, section prefixes teacher. / student. /
// pretrain. / train. / smooth. / synthetic. / data. / sample. . Any key can
// be overridden by a command-line flag of the same name (--key value).
std::map<std::string, std::string> parse_config_file(const std::string& path);

// Applies --key value / --key=value pairs on top of the file contents.
void apply_overrides(std::map<std::string, std::string>& config,
                     const std::vector<std::string>& args);

struct ExperimentConfig {
    std::string output_dir;
    std::vector<std::uint64_t> seed_list;

    bool use_synthetic = false;
    SyntheticSpec synthetic;
    std::string data_corpus, data_train, data_test;
    int data_min_freq = 1;

    // Teacher geometry; the student shares everything except n_layers.
    int teacher_layers = 0;
    int student_layers = 0;
    int emb_size = 0;
    int n_heads = 0;
    int ffn_size = 0;
    int max_seq_len = 0;
    double dropout = 0.1;
    bool mlm_head_bias = true;

    TrainConfig pretrain;
    TrainConfig train;
    double pretrain_eval_fraction = 0.05;
    SmoothingConfig smooth;

    int sample_n_samples = 200;
    int sample_n_report = 5;
    std::uint64_t sample_seed = 13;
    int sample_count = 8;       // test sentences smoothed when no input given
    std::string sample_text;    // literal input sentence
    std::string sample_input;   // file with one sentence per line
};

// Every invalid or unknown field is collected and reported in one ConfigError
// before any compute starts.
ExperimentConfig validate_experiment_config(const std::map<std::string, std::string>& kv);

// The experiment materialized: corpus, vocabulary, encoded splits and the
// concrete model configs (vocab_size and n_labels are data-derived).
struct LoadedExperiment {
    std::vector<std::string> corpus;
    std::vector<std::string> pretrain_corpus; // corpus minus the eval tail
    std::vector<std::string> eval_corpus;
    Vocabulary vocab;
    Dataset train;
    Dataset test;
    ModelConfig teacher_config;
    ModelConfig student_config;
};

LoadedExperiment load_experiment(const ExperimentConfig& config);

} // namespace textsmooth
