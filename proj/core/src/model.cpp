#include "textsmooth/model.hpp"

#include <cmath>

#include "textsmooth/errors.hpp"
#include "textsmooth/io_util.hpp"
#include "textsmooth/vocab.hpp"

namespace textsmooth {

namespace {

constexpr double kInitStd = 0.02;
constexpr double kAttentionMaskPenalty = -1e9;

std::atomic<std::uint64_t> g_distribution_embeds{0};

} // namespace

std::uint64_t distribution_embed_count() { return g_distribution_embeds.load(); }

void ModelConfig::validate() const {
    std::string err;
    auto fail = [&](const std::string& msg) { err += (err.empty() ? "" : "; ") + msg; };
    if (n_layers < 1) fail("n_layers must be positive");
    if (emb_size < 1) fail("emb_size must be positive");
    if (n_heads < 1) fail("n_heads must be positive");
    if (n_heads >= 1 && emb_size >= 1 && emb_size % n_heads != 0)
        fail("emb_size " + std::to_string(emb_size) + " not divisible by n_heads " +
             std::to_string(n_heads));
    if (ffn_size < 1) fail("ffn_size must be positive");
    if (vocab_size < Vocabulary::num_reserved)
        fail("vocab_size must be at least " + std::to_string(Vocabulary::num_reserved));
    if (max_seq_len < 3) fail("max_seq_len must be at least 3");
    if (n_segments != 2) fail("n_segments must be 2");
    if (n_labels < 2) fail("n_labels must be at least 2");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) fail("dropout_rate must be in [0,1)");
    if (!err.empty()) {
        throw ConfigError("invalid model config: " + err);
    }
}

void TransformerParams::for_each_param(
    const std::function<void(const std::string&, Tensor&)>& fn) {
    fn("word_embedding", word_embedding);
    fn("position_embedding", position_embedding);
    fn("segment_embedding", segment_embedding);
    fn("embed_ln_gain", embed_ln_gain);
    fn("embed_ln_bias", embed_ln_bias);
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const std::string p = "layer" + std::to_string(l) + ".";
        LayerParams& lp = layers[l];
        fn(p + "attn_wq", lp.attn_wq);
        fn(p + "attn_bq", lp.attn_bq);
        fn(p + "attn_wk", lp.attn_wk);
        fn(p + "attn_bk", lp.attn_bk);
        fn(p + "attn_wv", lp.attn_wv);
        fn(p + "attn_bv", lp.attn_bv);
        fn(p + "attn_wo", lp.attn_wo);
        fn(p + "attn_bo", lp.attn_bo);
        fn(p + "ln1_gain", lp.ln1_gain);
        fn(p + "ln1_bias", lp.ln1_bias);
        fn(p + "ffn_w1", lp.ffn_w1);
        fn(p + "ffn_b1", lp.ffn_b1);
        fn(p + "ffn_w2", lp.ffn_w2);
        fn(p + "ffn_b2", lp.ffn_b2);
        fn(p + "ln2_gain", lp.ln2_gain);
        fn(p + "ln2_bias", lp.ln2_bias);
    }
    fn("mlm_bias", mlm_bias);
    fn("classifier_w", classifier_w);
    fn("classifier_b", classifier_b);
}

void TransformerParams::for_each_param(
    const std::function<void(const std::string&, const Tensor&)>& fn) const {
    const_cast<TransformerParams*>(this)->for_each_param(
        [&fn](const std::string& name, Tensor& t) { fn(name, t); });
}

std::vector<Tensor*> TransformerParams::param_list() {
    std::vector<Tensor*> out;
    for_each_param([&out](const std::string&, Tensor& t) { out.push_back(&t); });
    return out;
}

bool TransformerParams::all_finite() const {
    bool ok = true;
    for_each_param([&ok](const std::string&, const Tensor& t) {
        if (!t.all_finite()) ok = false;
    });
    return ok;
}

namespace {

Tensor trunc_normal(std::vector<int> shape, Rng& rng) {
    Tensor t(std::move(shape));
    for (std::size_t i = 0; i < t.size(); ++i) {
        t[i] = rng.truncated_normal(kInitStd, 2.0 * kInitStd);
    }
    return t;
}

LayerParams init_layer(const ModelConfig& c, Rng& rng) {
    LayerParams lp;
    lp.attn_wq = trunc_normal({c.emb_size, c.emb_size}, rng);
    lp.attn_bq = Tensor::zeros({c.emb_size});
    lp.attn_wk = trunc_normal({c.emb_size, c.emb_size}, rng);
    lp.attn_bk = Tensor::zeros({c.emb_size});
    lp.attn_wv = trunc_normal({c.emb_size, c.emb_size}, rng);
    lp.attn_bv = Tensor::zeros({c.emb_size});
    lp.attn_wo = trunc_normal({c.emb_size, c.emb_size}, rng);
    lp.attn_bo = Tensor::zeros({c.emb_size});
    lp.ln1_gain = Tensor::filled({c.emb_size}, 1.0);
    lp.ln1_bias = Tensor::zeros({c.emb_size});
    lp.ffn_w1 = trunc_normal({c.emb_size, c.ffn_size}, rng);
    lp.ffn_b1 = Tensor::zeros({c.ffn_size});
    lp.ffn_w2 = trunc_normal({c.ffn_size, c.emb_size}, rng);
    lp.ffn_b2 = Tensor::zeros({c.emb_size});
    lp.ln2_gain = Tensor::filled({c.emb_size}, 1.0);
    lp.ln2_bias = Tensor::zeros({c.emb_size});
    return lp;
}

} // namespace

TransformerParams init_params(const ModelConfig& config, std::uint64_t seed) {
    config.validate();
    Rng rng(mix64(seed, 0x1417ULL));
    TransformerParams p;
    p.config = config;
    p.word_embedding = trunc_normal({config.vocab_size, config.emb_size}, rng);
    p.position_embedding = trunc_normal({config.max_seq_len, config.emb_size}, rng);
    p.segment_embedding = trunc_normal({config.n_segments, config.emb_size}, rng);
    p.embed_ln_gain = Tensor::filled({config.emb_size}, 1.0);
    p.embed_ln_bias = Tensor::zeros({config.emb_size});
    for (int l = 0; l < config.n_layers; ++l) {
        p.layers.push_back(init_layer(config, rng));
    }
    p.mlm_bias = Tensor::zeros({config.vocab_size});
    p.classifier_w = trunc_normal({config.emb_size, config.n_labels}, rng);
    p.classifier_b = Tensor::zeros({config.n_labels});
    return p;
}

TransformerParams init_student_from_teacher(const TransformerParams& teacher,
                                            const ModelConfig& student_config,
                                            std::uint64_t seed) {
    student_config.validate();
    const ModelConfig& tc = teacher.config;
    std::string err;
    auto fail = [&](const std::string& msg) { err += (err.empty() ? "" : "; ") + msg; };
    if (student_config.n_layers > tc.n_layers)
        fail("student has " + std::to_string(student_config.n_layers) +
             " layers, teacher only " + std::to_string(tc.n_layers));
    if (student_config.emb_size != tc.emb_size) fail("emb_size differs");
    if (student_config.n_heads != tc.n_heads) fail("n_heads differs");
    if (student_config.ffn_size != tc.ffn_size) fail("ffn_size differs");
    if (student_config.vocab_size != tc.vocab_size) fail("vocab_size differs");
    if (student_config.max_seq_len != tc.max_seq_len) fail("max_seq_len differs");
    if (!err.empty()) {
        throw ConfigError("cannot initialize student from teacher: " + err);
    }
    TransformerParams p;
    p.config = student_config;
    p.word_embedding = teacher.word_embedding;
    p.position_embedding = teacher.position_embedding;
    p.segment_embedding = teacher.segment_embedding;
    p.embed_ln_gain = teacher.embed_ln_gain;
    p.embed_ln_bias = teacher.embed_ln_bias;
    p.layers.assign(teacher.layers.begin(),
                    teacher.layers.begin() + student_config.n_layers);
    p.mlm_bias = teacher.mlm_bias;
    Rng rng(mix64(seed, 0xC1A55ULL));
    p.classifier_w = trunc_normal({student_config.emb_size, student_config.n_labels}, rng);
    p.classifier_b = Tensor::zeros({student_config.n_labels});
    return p;
}

std::uint64_t params_checksum(const TransformerParams& params) {
    io::Fnv1a h;
    const ModelConfig& c = params.config;
    for (int v : {c.n_layers, c.emb_size, c.n_heads, c.ffn_size, c.vocab_size,
                  c.max_seq_len, c.n_segments, c.n_labels,
                  static_cast<int>(c.mlm_head_bias)}) {
        h.add_u64(static_cast<std::uint64_t>(v));
    }
    h.add_f64(c.dropout_rate);
    params.for_each_param([&h](const std::string& name, const Tensor& t) {
        h.add_string(name);
        for (int d : t.shape()) h.add_u64(static_cast<std::uint64_t>(d));
        for (std::size_t i = 0; i < t.size(); ++i) h.add_f64(t[i]);
    });
    return h.value();
}

// ---- forward ----

namespace {

Value lift(Tape& tape, const Tensor& t, bool trainable) {
    return trainable ? tape.leaf(t) : tape.constant(t);
}

void check_segments(const ModelConfig& c, int seq_len, const std::vector<int>& segment_ids) {
    if (static_cast<int>(segment_ids.size()) != seq_len) {
        throw ShapeError("segment_ids length " + std::to_string(segment_ids.size()) +
                         " != sequence length " + std::to_string(seq_len));
    }
    if (seq_len > c.max_seq_len) {
        throw ShapeError("sequence length " + std::to_string(seq_len) +
                         " exceeds max_seq_len " + std::to_string(c.max_seq_len));
    }
    for (int s : segment_ids) {
        if (s < 0 || s >= c.n_segments) {
            throw ShapeError("segment id " + std::to_string(s) + " out of range");
        }
    }
}

Value positional_and_segment(const LiftedParams& p, Value tokens,
                             const std::vector<int>& segment_ids) {
    const int seq_len = static_cast<int>(segment_ids.size());
    std::vector<int> positions(static_cast<std::size_t>(seq_len));
    for (int i = 0; i < seq_len; ++i) positions[static_cast<std::size_t>(i)] = i;
    Value pos = take_rows(p.position_embedding, positions);
    Value seg = take_rows(p.segment_embedding, segment_ids);
    return add(add(tokens, pos), seg);
}

// Inverted dropout mask: entries are 0 or 1/(1-rate). Row-major draw order.
Tensor dropout_mask(const std::vector<int>& shape, double rate, Rng& rng) {
    Tensor mask(shape);
    const double keep = 1.0 / (1.0 - rate);
    for (std::size_t i = 0; i < mask.size(); ++i) {
        mask[i] = rng.uniform() >= rate ? keep : 0.0;
    }
    return mask;
}

Value maybe_dropout(Value x, double rate, bool training, Rng* rng) {
    if (!training || rate <= 0.0 || rng == nullptr) {
        return x;
    }
    return mul_const(x, dropout_mask(x.val().shape(), rate, *rng));
}

Value linear(Value x, Value w, Value b) {
    return add_row(matmul(x, w), b);
}

} // namespace

LiftedParams lift_params(Tape& tape, const TransformerParams& params, bool trainable) {
    LiftedParams lp;
    lp.config = &params.config;
    lp.word_embedding = lift(tape, params.word_embedding, trainable);
    lp.position_embedding = lift(tape, params.position_embedding, trainable);
    lp.segment_embedding = lift(tape, params.segment_embedding, trainable);
    lp.embed_ln_gain = lift(tape, params.embed_ln_gain, trainable);
    lp.embed_ln_bias = lift(tape, params.embed_ln_bias, trainable);
    for (const LayerParams& l : params.layers) {
        LiftedLayer ll;
        ll.attn_wq = lift(tape, l.attn_wq, trainable);
        ll.attn_bq = lift(tape, l.attn_bq, trainable);
        ll.attn_wk = lift(tape, l.attn_wk, trainable);
        ll.attn_bk = lift(tape, l.attn_bk, trainable);
        ll.attn_wv = lift(tape, l.attn_wv, trainable);
        ll.attn_bv = lift(tape, l.attn_bv, trainable);
        ll.attn_wo = lift(tape, l.attn_wo, trainable);
        ll.attn_bo = lift(tape, l.attn_bo, trainable);
        ll.ln1_gain = lift(tape, l.ln1_gain, trainable);
        ll.ln1_bias = lift(tape, l.ln1_bias, trainable);
        ll.ffn_w1 = lift(tape, l.ffn_w1, trainable);
        ll.ffn_b1 = lift(tape, l.ffn_b1, trainable);
        ll.ffn_w2 = lift(tape, l.ffn_w2, trainable);
        ll.ffn_b2 = lift(tape, l.ffn_b2, trainable);
        ll.ln2_gain = lift(tape, l.ln2_gain, trainable);
        ll.ln2_bias = lift(tape, l.ln2_bias, trainable);
        lp.layers.push_back(ll);
    }
    lp.mlm_bias = lift(tape, params.mlm_bias, trainable);
    lp.classifier_w = lift(tape, params.classifier_w, trainable);
    lp.classifier_b = lift(tape, params.classifier_b, trainable);
    return lp;
}

std::vector<const Tensor*> LiftedParams::grad_list() const {
    std::vector<const Tensor*> out;
    Tape* tape = word_embedding.tape();
    auto push = [&](const Value& v) { out.push_back(&tape->grad_at(v.node())); };
    push(word_embedding);
    push(position_embedding);
    push(segment_embedding);
    push(embed_ln_gain);
    push(embed_ln_bias);
    for (const LiftedLayer& l : layers) {
        push(l.attn_wq);
        push(l.attn_bq);
        push(l.attn_wk);
        push(l.attn_bk);
        push(l.attn_wv);
        push(l.attn_bv);
        push(l.attn_wo);
        push(l.attn_bo);
        push(l.ln1_gain);
        push(l.ln1_bias);
        push(l.ffn_w1);
        push(l.ffn_b1);
        push(l.ffn_w2);
        push(l.ffn_b2);
        push(l.ln2_gain);
        push(l.ln2_bias);
    }
    push(mlm_bias);
    push(classifier_w);
    push(classifier_b);
    return out;
}

Value embed_input(Tape& tape, const LiftedParams& p, const std::vector<int>& token_ids,
                  const std::vector<int>& segment_ids) {
    const ModelConfig& c = *p.config;
    check_segments(c, static_cast<int>(token_ids.size()), segment_ids);
    for (int id : token_ids) {
        if (id < 0 || id >= c.vocab_size) {
            throw ShapeError("token id " + std::to_string(id) + " out of range [0," +
                             std::to_string(c.vocab_size) + ")");
        }
    }
    Value tok = take_rows(p.word_embedding, token_ids);
    return positional_and_segment(p, tok, segment_ids);
}

Value embed_input(Tape& tape, const LiftedParams& p, const Tensor& token_distributions,
                  const std::vector<int>& segment_ids) {
    const ModelConfig& c = *p.config;
    if (token_distributions.ndim() != 2 || token_distributions.cols() != c.vocab_size) {
        throw ShapeError("token distribution shape " + token_distributions.shape_str() +
                         " does not match vocab size " + std::to_string(c.vocab_size));
    }
    check_segments(c, token_distributions.rows(), segment_ids);
    for (int i = 0; i < token_distributions.rows(); ++i) {
        double s = 0.0;
        const double* row = token_distributions.row_ptr(i);
        for (int j = 0; j < c.vocab_size; ++j) s += row[j];
        if (std::fabs(s - 1.0) > 1e-6) {
            throw NumericError("token distribution row " + std::to_string(i) +
                               " sums to " + std::to_string(s) + ", expected 1");
        }
    }
    g_distribution_embeds.fetch_add(1, std::memory_order_relaxed);
    // Expected embedding: distribution x W. One-hot rows reduce to lookups.
    Value tok = matmul(tape.constant(token_distributions), p.word_embedding);
    return positional_and_segment(p, tok, segment_ids);
}

Value forward_encoder(Tape& tape, const LiftedParams& p, Value embedded,
                      const std::vector<int>& attention_mask, bool training,
                      Rng* dropout_rng, ForwardStats* stats, EncoderTrace* trace) {
    const ModelConfig& c = *p.config;
    const int seq_len = embedded.val().rows();
    if (embedded.val().cols() != c.emb_size) {
        throw ShapeError("embedded input width " + std::to_string(embedded.val().cols()) +
                         " != emb_size " + std::to_string(c.emb_size));
    }
    if (static_cast<int>(attention_mask.size()) != seq_len) {
        throw ShapeError("attention mask length " + std::to_string(attention_mask.size()) +
                         " != sequence length " + std::to_string(seq_len));
    }
    if (stats) {
        stats->encoder_forwards.fetch_add(1, std::memory_order_relaxed);
    }
    Tensor mask_row({seq_len});
    for (int i = 0; i < seq_len; ++i) {
        mask_row[static_cast<std::size_t>(i)] =
            attention_mask[static_cast<std::size_t>(i)] ? 0.0 : kAttentionMaskPenalty;
    }

    const int head_dim = c.emb_size / c.n_heads;
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(head_dim));

    Value x = layer_norm(embedded, p.embed_ln_gain, p.embed_ln_bias);
    x = maybe_dropout(x, c.dropout_rate, training, dropout_rng);

    for (const LiftedLayer& layer : p.layers) {
        Value q = linear(x, layer.attn_wq, layer.attn_bq);
        Value k = linear(x, layer.attn_wk, layer.attn_bk);
        Value v = linear(x, layer.attn_wv, layer.attn_bv);
        std::vector<Value> heads;
        heads.reserve(static_cast<std::size_t>(c.n_heads));
        for (int h = 0; h < c.n_heads; ++h) {
            const int c0 = h * head_dim, c1 = (h + 1) * head_dim;
            Value qh = slice_cols(q, c0, c1);
            Value kh = slice_cols(k, c0, c1);
            Value vh = slice_cols(v, c0, c1);
            Value scores = scale(matmul_nt(qh, kh), inv_sqrt_d);
            scores = add_row(scores, tape.constant(mask_row));
            Value probs = softmax_rows(scores);
            if (trace) {
                trace->attention_probs.push_back(probs.val());
            }
            probs = maybe_dropout(probs, c.dropout_rate, training, dropout_rng);
            heads.push_back(matmul(probs, vh));
        }
        Value attn = linear(concat_cols(heads), layer.attn_wo, layer.attn_bo);
        attn = maybe_dropout(attn, c.dropout_rate, training, dropout_rng);
        x = layer_norm(add(x, attn), layer.ln1_gain, layer.ln1_bias);

        Value f = gelu(linear(x, layer.ffn_w1, layer.ffn_b1));
        f = linear(f, layer.ffn_w2, layer.ffn_b2);
        f = maybe_dropout(f, c.dropout_rate, training, dropout_rng);
        x = layer_norm(add(x, f), layer.ln2_gain, layer.ln2_bias);
    }
    return x;
}

Value mlm_logits(Tape& tape, const LiftedParams& p, Value hidden) {
    const ModelConfig& c = *p.config;
    if (hidden.val().cols() != c.emb_size) {
        throw ShapeError("hidden width " + std::to_string(hidden.val().cols()) +
                         " != emb_size " + std::to_string(c.emb_size));
    }
    Value logits = matmul_nt(hidden, p.word_embedding);
    if (c.mlm_head_bias) {
        logits = add_row(logits, p.mlm_bias);
    }
    return logits;
}

Value classify(Tape& tape, const LiftedParams& p, Value hidden) {
    Value cls = take_rows(hidden, {0});
    return linear(cls, p.classifier_w, p.classifier_b);
}

// ---- plain-tensor wrappers ----

Tensor embed_input(const TransformerParams& params, const std::vector<int>& token_ids,
                   const std::vector<int>& segment_ids) {
    Tape tape;
    LiftedParams lp = lift_params(tape, params, false);
    return embed_input(tape, lp, token_ids, segment_ids).val();
}

Tensor embed_input(const TransformerParams& params, const Tensor& token_distributions,
                   const std::vector<int>& segment_ids) {
    Tape tape;
    LiftedParams lp = lift_params(tape, params, false);
    return embed_input(tape, lp, token_distributions, segment_ids).val();
}

Tensor forward_encoder(const TransformerParams& params, const Tensor& embedded,
                       const std::vector<int>& attention_mask, bool training,
                       Rng* dropout_rng, ForwardStats* stats, EncoderTrace* trace) {
    Tape tape;
    LiftedParams lp = lift_params(tape, params, false);
    return forward_encoder(tape, lp, tape.constant(embedded), attention_mask,
                           training, dropout_rng, stats, trace)
        .val();
}

Tensor mlm_logits(const TransformerParams& params, const Tensor& hidden) {
    Tape tape;
    LiftedParams lp = lift_params(tape, params, false);
    return mlm_logits(tape, lp, tape.constant(hidden)).val();
}

Tensor classify(const TransformerParams& params, const Tensor& hidden) {
    Tape tape;
    LiftedParams lp = lift_params(tape, params, false);
    return classify(tape, lp, tape.constant(hidden)).val();
}

} // namespace textsmooth
