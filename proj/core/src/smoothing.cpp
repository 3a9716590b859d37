#include "textsmooth/smoothing.hpp"

#include <atomic>
#include <cmath>
#include <fstream>

#include "textsmooth/autodiff.hpp"
#include "textsmooth/errors.hpp"
#include "textsmooth/io_util.hpp"
#include "textsmooth/vocab.hpp"

namespace textsmooth {

void SmoothingConfig::validate() const {
    if (!(lambda >= 0.0 && lambda <= 1.0)) {
        throw ConfigError("smoothing lambda must be in [0,1], got " +
                          std::to_string(lambda));
    }
}

Tensor mlm_distribution(const TransformerParams& teacher, const EncodedInstance& instance,
                        ForwardStats* stats) {
    const ModelConfig& c = teacher.config;
    if (instance.seq_len() > c.max_seq_len) {
        throw ShapeError("instance length " + std::to_string(instance.seq_len()) +
                         " exceeds teacher max_seq_len " + std::to_string(c.max_seq_len));
    }
    for (int id : instance.token_ids) {
        if (id < 0 || id >= c.vocab_size) {
            throw ShapeError("token id " + std::to_string(id) +
                             " outside teacher vocabulary of size " +
                             std::to_string(c.vocab_size));
        }
        // No mask corruption is ever applied when fetching MLM predictions.
        if (id == Vocabulary::mask_id) {
            throw ContractError("mlm_distribution: [MASK] id found in teacher input");
        }
    }
    Tape tape;
    LiftedParams lp = lift_params(tape, teacher, /*trainable=*/false);
    Value emb = embed_input(tape, lp, instance.token_ids, instance.segment_ids);
    Value hidden = forward_encoder(tape, lp, emb, instance.attention_mask,
                                   /*training=*/false, nullptr, stats);
    Value logits = mlm_logits(tape, lp, hidden);
    return softmax_rows(logits.val());
}

SmoothedInstance smooth_text(const EncodedInstance& instance, const Tensor& mlm_dist,
                             const SmoothingConfig& config) {
    config.validate();
    const int seq_len = instance.seq_len();
    if (mlm_dist.ndim() != 2 || mlm_dist.rows() != seq_len) {
        throw ShapeError("mlm distribution shape " + mlm_dist.shape_str() +
                         " does not cover " + std::to_string(seq_len) + " positions");
    }
    const int vocab_size = mlm_dist.cols();
    const double lam = config.lambda;

    SmoothedInstance out;
    out.token_ids = instance.token_ids;
    out.position_ids = instance.position_ids;
    out.segment_ids = instance.segment_ids;
    out.attention_mask = instance.attention_mask;
    out.label = instance.label;
    out.distributions = Tensor({seq_len, vocab_size});

    for (int i = 0; i < seq_len; ++i) {
        const int tok = instance.token_ids[static_cast<std::size_t>(i)];
        const bool padding = instance.attention_mask[static_cast<std::size_t>(i)] == 0;
        const bool special = tok == Vocabulary::cls_id || tok == Vocabulary::sep_id;
        double* row = out.distributions.row_ptr(i);
        if (padding || (special && config.exempt_special_tokens)) {
            row[tok] = 1.0; // exact one-hot
            continue;
        }
        const double* mlm = mlm_dist.row_ptr(i);
        for (int j = 0; j < vocab_size; ++j) {
            row[j] = (1.0 - lam) * mlm[j];
        }
        row[tok] += lam;
    }
    return out;
}

SmoothResult smooth_dataset(const TransformerParams& teacher, const Dataset& dataset,
                            const SmoothingConfig& config) {
    config.validate();
    SmoothResult result;
    result.instances.reserve(dataset.instances.size());
    ForwardStats stats;
    for (const EncodedInstance& instance : dataset.instances) {
        const Tensor dist = mlm_distribution(teacher, instance, &stats);
        result.instances.push_back(smooth_text(instance, dist, config));
    }
    result.teacher_forwards = stats.encoder_forwards.load();
    return result;
}

namespace {

constexpr char kMagic[8] = {'T', 'S', 'C', 'A', 'C', 'H', '1', '\n'};
constexpr std::uint32_t kVersion = 1;

} // namespace

void save_smoothed_cache(const std::string& path, const SmoothResult& result,
                         const SmoothingConfig& config, std::uint64_t teacher_checksum,
                         int vocab_size) {
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw IoError("cannot write smoothed cache: " + path);
    }
    const int seq_len = result.instances.empty() ? 0 : result.instances.front().seq_len();
    os.write(kMagic, sizeof(kMagic));
    io::write_u32(os, kVersion);
    io::write_f64(os, config.lambda);
    io::write_u8(os, config.exempt_special_tokens ? 1 : 0);
    io::write_u64(os, teacher_checksum);
    io::write_u64(os, result.instances.size());
    io::write_u64(os, static_cast<std::uint64_t>(seq_len));
    io::write_u64(os, static_cast<std::uint64_t>(vocab_size));
    io::write_u64(os, result.teacher_forwards);
    for (const SmoothedInstance& inst : result.instances) {
        if (inst.seq_len() != seq_len || inst.distributions.cols() != vocab_size) {
            throw ContractError("save_smoothed_cache: inconsistent instance shapes");
        }
        io::write_u32(os, static_cast<std::uint32_t>(inst.label));
        for (int v : inst.token_ids) io::write_u32(os, static_cast<std::uint32_t>(v));
        for (int v : inst.segment_ids) io::write_u8(os, static_cast<std::uint8_t>(v));
        for (int v : inst.attention_mask) io::write_u8(os, static_cast<std::uint8_t>(v));
        for (std::size_t i = 0; i < inst.distributions.size(); ++i) {
            io::write_f64(os, inst.distributions[i]);
        }
    }
    if (!os) {
        throw IoError("write failed: " + path);
    }
}

SmoothedCache load_smoothed_cache(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw IoError("cannot open smoothed cache: " + path);
    }
    char magic[sizeof(kMagic)];
    if (!is.read(magic, sizeof(magic)) ||
        !std::equal(std::begin(magic), std::end(magic), std::begin(kMagic))) {
        throw ParseError(path + ": not a smoothed cache file (bad magic)");
    }
    const std::uint32_t version = io::read_u32(is);
    if (version != kVersion) {
        throw ParseError(path + ": unsupported cache version " + std::to_string(version));
    }
    SmoothedCache cache;
    cache.config.lambda = io::read_f64(is);
    cache.config.exempt_special_tokens = io::read_u8(is) != 0;
    cache.teacher_checksum = io::read_u64(is);
    const std::uint64_t n = io::read_u64(is);
    const int seq_len = static_cast<int>(io::read_u64(is));
    cache.vocab_size = static_cast<int>(io::read_u64(is));
    cache.result.teacher_forwards = io::read_u64(is);
    for (std::uint64_t k = 0; k < n; ++k) {
        SmoothedInstance inst;
        inst.label = static_cast<int>(io::read_u32(is));
        inst.token_ids.resize(static_cast<std::size_t>(seq_len));
        for (int& v : inst.token_ids) v = static_cast<int>(io::read_u32(is));
        inst.segment_ids.resize(static_cast<std::size_t>(seq_len));
        for (int& v : inst.segment_ids) v = io::read_u8(is);
        inst.attention_mask.resize(static_cast<std::size_t>(seq_len));
        for (int& v : inst.attention_mask) v = io::read_u8(is);
        inst.position_ids.resize(static_cast<std::size_t>(seq_len));
        for (int i = 0; i < seq_len; ++i) inst.position_ids[static_cast<std::size_t>(i)] = i;
        inst.distributions = Tensor({seq_len, cache.vocab_size});
        for (std::size_t i = 0; i < inst.distributions.size(); ++i) {
            inst.distributions[i] = io::read_f64(is);
        }
        cache.result.instances.push_back(std::move(inst));
    }
    return cache;
}

} // namespace textsmooth
