#include "textsmooth/checkpoint.hpp"

#include <fstream>

#include "textsmooth/errors.hpp"
#include "textsmooth/io_util.hpp"

namespace textsmooth {

namespace {

constexpr char kMagic[8] = {'T', 'S', 'C', 'K', 'P', 'T', '1', '\n'};
constexpr std::uint32_t kVersion = 1;

void write_config(std::ostream& os, const ModelConfig& c) {
    io::write_u32(os, static_cast<std::uint32_t>(c.n_layers));
    io::write_u32(os, static_cast<std::uint32_t>(c.emb_size));
    io::write_u32(os, static_cast<std::uint32_t>(c.n_heads));
    io::write_u32(os, static_cast<std::uint32_t>(c.ffn_size));
    io::write_u32(os, static_cast<std::uint32_t>(c.vocab_size));
    io::write_u32(os, static_cast<std::uint32_t>(c.max_seq_len));
    io::write_u32(os, static_cast<std::uint32_t>(c.n_segments));
    io::write_u32(os, static_cast<std::uint32_t>(c.n_labels));
    io::write_f64(os, c.dropout_rate);
    io::write_u8(os, c.mlm_head_bias ? 1 : 0);
}

ModelConfig read_config(std::istream& is) {
    ModelConfig c;
    c.n_layers = static_cast<int>(io::read_u32(is));
    c.emb_size = static_cast<int>(io::read_u32(is));
    c.n_heads = static_cast<int>(io::read_u32(is));
    c.ffn_size = static_cast<int>(io::read_u32(is));
    c.vocab_size = static_cast<int>(io::read_u32(is));
    c.max_seq_len = static_cast<int>(io::read_u32(is));
    c.n_segments = static_cast<int>(io::read_u32(is));
    c.n_labels = static_cast<int>(io::read_u32(is));
    c.dropout_rate = io::read_f64(is);
    c.mlm_head_bias = io::read_u8(is) != 0;
    return c;
}

} // namespace

void save_checkpoint(const std::string& path, const TransformerParams& params,
                     const Vocabulary& vocab) {
    if (vocab.size() != params.config.vocab_size) {
        throw ContractError("save_checkpoint: vocabulary size " +
                            std::to_string(vocab.size()) + " != config vocab_size " +
                            std::to_string(params.config.vocab_size));
    }
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw IoError("cannot write checkpoint: " + path);
    }
    os.write(kMagic, sizeof(kMagic));
    io::write_u32(os, kVersion);
    write_config(os, params.config);
    io::write_u32(os, static_cast<std::uint32_t>(vocab.size()));
    for (const std::string& tok : vocab.tokens()) {
        io::write_string(os, tok);
    }
    std::uint32_t n_tensors = 0;
    params.for_each_param([&n_tensors](const std::string&, const Tensor&) { ++n_tensors; });
    io::write_u32(os, n_tensors);
    params.for_each_param([&os](const std::string& name, const Tensor& t) {
        io::write_string(os, name);
        io::write_u32(os, static_cast<std::uint32_t>(t.ndim()));
        for (int d : t.shape()) {
            io::write_u64(os, static_cast<std::uint64_t>(d));
        }
        for (std::size_t i = 0; i < t.size(); ++i) {
            io::write_f64(os, t[i]);
        }
    });
    if (!os) {
        throw IoError("write failed: " + path);
    }
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw IoError("cannot open checkpoint: " + path);
    }
    char magic[sizeof(kMagic)];
    if (!is.read(magic, sizeof(magic)) ||
        !std::equal(std::begin(magic), std::end(magic), std::begin(kMagic))) {
        throw ParseError(path + ": not a checkpoint file (bad magic)");
    }
    const std::uint32_t version = io::read_u32(is);
    if (version != kVersion) {
        throw ParseError(path + ": unsupported checkpoint version " +
                         std::to_string(version) + ", expected " +
                         std::to_string(kVersion));
    }
    Checkpoint ckpt;
    const ModelConfig config = read_config(is);
    config.validate();

    const std::uint32_t vocab_n = io::read_u32(is);
    std::vector<std::string> tokens;
    tokens.reserve(vocab_n);
    for (std::uint32_t i = 0; i < vocab_n; ++i) {
        tokens.push_back(io::read_string(is));
    }
    ckpt.vocab = Vocabulary::from_tokens(std::move(tokens));
    if (ckpt.vocab.size() != config.vocab_size) {
        throw ParseError(path + ": vocabulary has " + std::to_string(ckpt.vocab.size()) +
                         " tokens, config says " + std::to_string(config.vocab_size));
    }

    // Template parameters from the config, then overwrite every tensor.
    ckpt.params = init_params(config, 0);
    std::uint32_t expected = 0;
    ckpt.params.for_each_param([&expected](const std::string&, Tensor&) { ++expected; });
    const std::uint32_t n_tensors = io::read_u32(is);
    if (n_tensors != expected) {
        throw ParseError(path + ": checkpoint has " + std::to_string(n_tensors) +
                         " tensors, config implies " + std::to_string(expected));
    }
    ckpt.params.for_each_param([&is, &path](const std::string& name, Tensor& t) {
        const std::string got = io::read_string(is);
        if (got != name) {
            throw ParseError(path + ": expected tensor '" + name + "', found '" + got + "'");
        }
        const std::uint32_t ndim = io::read_u32(is);
        std::vector<int> shape;
        for (std::uint32_t d = 0; d < ndim; ++d) {
            shape.push_back(static_cast<int>(io::read_u64(is)));
        }
        if (shape != t.shape()) {
            std::string got_shape = "[";
            for (std::size_t i = 0; i < shape.size(); ++i) {
                got_shape += (i ? "," : "") + std::to_string(shape[i]);
            }
            got_shape += "]";
            throw ParseError(path + ": tensor '" + name + "' has shape " + got_shape +
                             ", expected " + t.shape_str());
        }
        for (std::size_t i = 0; i < t.size(); ++i) {
            t[i] = io::read_f64(is);
        }
    });
    return ckpt;
}

} // namespace textsmooth
