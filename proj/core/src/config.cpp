#include "textsmooth/config.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "textsmooth/errors.hpp"

namespace textsmooth {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t");
    std::size_t b = s.find_last_not_of(" \t");
    if (a == std::string::npos) {
        return "";
    }
    return s.substr(a, b - a + 1);
}

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        "output_dir", "seed_list",
        "synthetic.seed", "synthetic.vocab_size", "synthetic.n_train",
        "synthetic.n_test", "synthetic.corpus_size",
        "data.corpus", "data.train", "data.test", "data.min_freq",
        "teacher.n_layers", "student.n_layers", "teacher.emb_size",
        "teacher.n_heads", "teacher.ffn_size", "teacher.max_seq_len",
        "teacher.dropout", "teacher.mlm_head_bias",
        "pretrain.epochs", "pretrain.batch_size", "pretrain.learning_rate",
        "pretrain.seed", "pretrain.mask_prob", "pretrain.eval_fraction",
        "train.epochs", "train.batch_size", "train.learning_rate", "train.seed",
        "train.kd_temperature", "train.kd_alpha",
        "smooth.lambda", "smooth.exempt_special_tokens",
        "sample.n_samples", "sample.n_report", "sample.seed", "sample.count",
        "sample.text", "sample.input",
    };
    return keys;
}

} // namespace

std::map<std::string, std::string> parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open config file: " + path);
    }
    std::map<std::string, std::string> kv;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) {
            line.resize(hash);
        }
        const std::string stripped = trim(line);
        if (stripped.empty()) {
            continue;
        }
        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path + ":" + std::to_string(line_no) +
                              ": expected `key = value`, got '" + stripped + "'");
        }
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        if (key.empty()) {
            throw ConfigError(path + ":" + std::to_string(line_no) + ": empty key");
        }
        kv[key] = value;
    }
    return kv;
}

void apply_overrides(std::map<std::string, std::string>& config,
                     const std::vector<std::string>& args) {
    std::size_t i = 0;
    while (i < args.size()) {
        const std::string& arg = args[i];
        if (arg.rfind("--", 0) != 0) {
            throw ConfigError("expected --key value override, got '" + arg + "'");
        }
        const std::string body = arg.substr(2);
        const std::size_t eq = body.find('=');
        if (eq != std::string::npos) {
            config[body.substr(0, eq)] = body.substr(eq + 1);
            ++i;
        } else {
            if (i + 1 >= args.size()) {
                throw ConfigError("override --" + body + " is missing a value");
            }
            config[body] = args[i + 1];
            i += 2;
        }
    }
}

namespace {

class Checker {
public:
    explicit Checker(const std::map<std::string, std::string>& kv) : kv_(kv) {}

    bool has(const std::string& key) const { return kv_.count(key) != 0; }

    std::string str(const std::string& key, const std::string& fallback) {
        const auto it = kv_.find(key);
        return it == kv_.end() ? fallback : it->second;
    }

    std::string required_str(const std::string& key) {
        const auto it = kv_.find(key);
        if (it == kv_.end() || it->second.empty()) {
            fail(key + " is required");
            return "";
        }
        return it->second;
    }

    long integer(const std::string& key, long fallback, long min_value) {
        const auto it = kv_.find(key);
        if (it == kv_.end()) {
            return fallback;
        }
        errno = 0;
        char* end = nullptr;
        const long v = std::strtol(it->second.c_str(), &end, 10);
        if (errno != 0 || end == it->second.c_str() || *end != '\0') {
            fail(key + ": '" + it->second + "' is not an integer");
            return fallback;
        }
        if (v < min_value) {
            fail(key + " must be >= " + std::to_string(min_value) + ", got " +
                 std::to_string(v));
        }
        return v;
    }

    long required_integer(const std::string& key, long min_value) {
        if (!has(key)) {
            fail(key + " is required");
            return min_value;
        }
        return integer(key, min_value, min_value);
    }

    double real(const std::string& key, double fallback) {
        const auto it = kv_.find(key);
        if (it == kv_.end()) {
            return fallback;
        }
        errno = 0;
        char* end = nullptr;
        const double v = std::strtod(it->second.c_str(), &end);
        if (errno != 0 || end == it->second.c_str() || *end != '\0') {
            fail(key + ": '" + it->second + "' is not a number");
            return fallback;
        }
        return v;
    }

    double required_real(const std::string& key) {
        if (!has(key)) {
            fail(key + " is required");
            return 0.0;
        }
        return real(key, 0.0);
    }

    bool boolean(const std::string& key, bool fallback) {
        const auto it = kv_.find(key);
        if (it == kv_.end()) {
            return fallback;
        }
        if (it->second == "true" || it->second == "1") return true;
        if (it->second == "false" || it->second == "0") return false;
        fail(key + ": '" + it->second + "' is not a boolean (true/false)");
        return fallback;
    }

    void fail(const std::string& msg) { errors_.push_back(msg); }

    void check_unknown_keys() {
        for (const auto& [key, value] : kv_) {
            if (!known_keys().count(key)) {
                errors_.push_back("unknown config key '" + key + "'");
            }
        }
    }

    void throw_if_failed() const {
        if (errors_.empty()) {
            return;
        }
        std::string msg = "invalid configuration (" + std::to_string(errors_.size()) +
                          " problem" + (errors_.size() == 1 ? "" : "s") + "):";
        for (const std::string& e : errors_) {
            msg += "\n  - " + e;
        }
        throw ConfigError(msg);
    }

private:
    const std::map<std::string, std::string>& kv_;
    std::vector<std::string> errors_;
};

std::vector<std::uint64_t> parse_seed_list(const std::string& text, Checker& check) {
    std::vector<std::uint64_t> seeds;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) {
            continue;
        }
        errno = 0;
        char* end = nullptr;
        const unsigned long long v = std::strtoull(item.c_str(), &end, 10);
        if (errno != 0 || end == item.c_str() || *end != '\0') {
            check.fail("seed_list: '" + item + "' is not an integer");
            continue;
        }
        seeds.push_back(v);
    }
    if (seeds.empty()) {
        check.fail("seed_list must contain at least one seed");
    }
    return seeds;
}

} // namespace

ExperimentConfig validate_experiment_config(const std::map<std::string, std::string>& kv) {
    Checker check(kv);
    check.check_unknown_keys();
    ExperimentConfig cfg;

    cfg.output_dir = check.required_str("output_dir");
    cfg.seed_list = parse_seed_list(check.str("seed_list", "1,2,3,4,5"), check);

    const bool has_synthetic = check.has("synthetic.seed") ||
                               check.has("synthetic.vocab_size") ||
                               check.has("synthetic.n_train") ||
                               check.has("synthetic.n_test") ||
                               check.has("synthetic.corpus_size");
    const bool has_files = check.has("data.corpus") || check.has("data.train") ||
                           check.has("data.test");
    if (has_synthetic && has_files) {
        check.fail("configure either synthetic.* or data.*, not both");
    }
    if (!has_synthetic && !has_files) {
        check.fail("a data source is required: synthetic.* or data.*");
    }
    cfg.use_synthetic = has_synthetic || !has_files;
    if (cfg.use_synthetic) {
        cfg.synthetic.seed = static_cast<std::uint64_t>(check.integer("synthetic.seed", 7, 0));
        cfg.synthetic.vocab_size = static_cast<int>(check.integer("synthetic.vocab_size", 200, 32));
        cfg.synthetic.n_train = static_cast<int>(check.integer("synthetic.n_train", 80, 2));
        cfg.synthetic.n_test = static_cast<int>(check.integer("synthetic.n_test", 400, 2));
        cfg.synthetic.corpus_size = static_cast<int>(check.integer("synthetic.corpus_size", 1400, 1));
    } else {
        cfg.data_corpus = check.required_str("data.corpus");
        cfg.data_train = check.required_str("data.train");
        cfg.data_test = check.required_str("data.test");
        cfg.data_min_freq = static_cast<int>(check.integer("data.min_freq", 1, 1));
        for (const std::string& path : {cfg.data_corpus, cfg.data_train, cfg.data_test}) {
            if (!path.empty() && !std::filesystem::exists(path)) {
                check.fail("data file does not exist: " + path);
            }
        }
    }

    cfg.teacher_layers = static_cast<int>(check.integer("teacher.n_layers", 2, 1));
    cfg.student_layers = static_cast<int>(check.integer("student.n_layers", 1, 1));
    if (cfg.student_layers > cfg.teacher_layers) {
        check.fail("student.n_layers (" + std::to_string(cfg.student_layers) +
                   ") must not exceed teacher.n_layers (" +
                   std::to_string(cfg.teacher_layers) + ")");
    }
    cfg.emb_size = static_cast<int>(check.integer("teacher.emb_size", 64, 1));
    cfg.n_heads = static_cast<int>(check.integer("teacher.n_heads", 4, 1));
    if (cfg.n_heads > 0 && cfg.emb_size % cfg.n_heads != 0) {
        check.fail("teacher.emb_size must be divisible by teacher.n_heads");
    }
    cfg.ffn_size = static_cast<int>(check.integer("teacher.ffn_size", 256, 1));
    cfg.max_seq_len = static_cast<int>(check.integer("teacher.max_seq_len", 16, 4));
    cfg.dropout = check.real("teacher.dropout", 0.1);
    if (!(cfg.dropout >= 0.0 && cfg.dropout < 1.0)) {
        check.fail("teacher.dropout must be in [0,1)");
    }
    cfg.mlm_head_bias = check.boolean("teacher.mlm_head_bias", true);

    // Student training hyperparameters have no hardcoded defaults; every
    // phase states them in the config file.
    cfg.pretrain.epochs = static_cast<int>(check.required_integer("pretrain.epochs", 1));
    cfg.pretrain.batch_size = static_cast<int>(check.required_integer("pretrain.batch_size", 1));
    cfg.pretrain.learning_rate = check.required_real("pretrain.learning_rate");
    cfg.pretrain.seed = static_cast<std::uint64_t>(check.integer("pretrain.seed", 101, 0));
    cfg.pretrain.mlm_mask_prob = check.real("pretrain.mask_prob", 0.15);
    if (!(cfg.pretrain.mlm_mask_prob >= 0.0 && cfg.pretrain.mlm_mask_prob <= 1.0)) {
        check.fail("pretrain.mask_prob must be in [0,1]");
    }
    cfg.pretrain_eval_fraction = check.real("pretrain.eval_fraction", 0.05);
    if (!(cfg.pretrain_eval_fraction >= 0.0 && cfg.pretrain_eval_fraction < 0.5)) {
        check.fail("pretrain.eval_fraction must be in [0,0.5)");
    }

    cfg.train.epochs = static_cast<int>(check.required_integer("train.epochs", 1));
    cfg.train.batch_size = static_cast<int>(check.required_integer("train.batch_size", 1));
    cfg.train.learning_rate = check.required_real("train.learning_rate");
    cfg.train.seed = static_cast<std::uint64_t>(check.integer("train.seed", 1, 0));
    cfg.train.kd_temperature = check.real("train.kd_temperature", 2.0);
    cfg.train.kd_alpha = check.real("train.kd_alpha", 0.5);
    if (!(cfg.train.kd_temperature > 0.0)) {
        check.fail("train.kd_temperature must be positive");
    }
    if (!(cfg.train.kd_alpha >= 0.0 && cfg.train.kd_alpha <= 1.0)) {
        check.fail("train.kd_alpha must be in [0,1]");
    }
    if (check.has("pretrain.learning_rate") && !(cfg.pretrain.learning_rate > 0.0)) {
        check.fail("pretrain.learning_rate must be positive");
    }
    if (check.has("train.learning_rate") && !(cfg.train.learning_rate > 0.0)) {
        check.fail("train.learning_rate must be positive");
    }

    cfg.smooth.lambda = check.real("smooth.lambda", 0.5);
    if (!(cfg.smooth.lambda >= 0.0 && cfg.smooth.lambda <= 1.0)) {
        check.fail("smooth.lambda must be in [0,1], got " + check.str("smooth.lambda", ""));
    }
    cfg.smooth.exempt_special_tokens = check.boolean("smooth.exempt_special_tokens", false);

    cfg.sample_n_samples = static_cast<int>(check.integer("sample.n_samples", 200, 1));
    cfg.sample_n_report = static_cast<int>(check.integer("sample.n_report", 5, 1));
    if (cfg.sample_n_report > cfg.sample_n_samples) {
        check.fail("sample.n_report must not exceed sample.n_samples");
    }
    cfg.sample_seed = static_cast<std::uint64_t>(check.integer("sample.seed", 13, 0));
    cfg.sample_count = static_cast<int>(check.integer("sample.count", 8, 1));
    cfg.sample_text = check.str("sample.text", "");
    cfg.sample_input = check.str("sample.input", "");

    check.throw_if_failed();
    cfg.synthetic.max_seq_len = cfg.max_seq_len;
    return cfg;
}

LoadedExperiment load_experiment(const ExperimentConfig& config) {
    LoadedExperiment exp;
    if (config.use_synthetic) {
        SyntheticTask task = make_synthetic_task(config.synthetic);
        exp.corpus = std::move(task.corpus);
        exp.vocab = std::move(task.vocab);
        exp.train = std::move(task.train);
        exp.test = std::move(task.test);
    } else {
        exp.corpus = load_corpus(config.data_corpus);
        exp.vocab = Vocabulary::build(exp.corpus, config.data_min_freq);
        exp.train = load_dataset(config.data_train, exp.vocab, config.max_seq_len);
        exp.test = load_dataset(config.data_test, exp.vocab, config.max_seq_len,
                                &exp.train.label_set);
    }
    const std::size_t eval_n = static_cast<std::size_t>(
        config.pretrain_eval_fraction * static_cast<double>(exp.corpus.size()));
    exp.pretrain_corpus.assign(exp.corpus.begin(), exp.corpus.end() - static_cast<long>(eval_n));
    exp.eval_corpus.assign(exp.corpus.end() - static_cast<long>(eval_n), exp.corpus.end());

    ModelConfig teacher;
    teacher.n_layers = config.teacher_layers;
    teacher.emb_size = config.emb_size;
    teacher.n_heads = config.n_heads;
    teacher.ffn_size = config.ffn_size;
    teacher.vocab_size = exp.vocab.size();
    teacher.max_seq_len = config.max_seq_len;
    teacher.n_labels = std::max<int>(2, static_cast<int>(exp.train.label_set.size()));
    teacher.dropout_rate = config.dropout;
    teacher.mlm_head_bias = config.mlm_head_bias;
    teacher.validate();
    exp.teacher_config = teacher;
    exp.student_config = teacher;
    exp.student_config.n_layers = config.student_layers;
    exp.student_config.validate();
    return exp;
}

} // namespace textsmooth
