#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "textsmooth/autodiff.hpp"
#include "textsmooth/rng.hpp"
#include "textsmooth/tensor.hpp"

namespace textsmooth {

struct ModelConfig {
    int n_layers = 2;
    int emb_size = 64;
    int n_heads = 4;
    int ffn_size = 256;
    int vocab_size = 0;
    int max_seq_len = 16;
    int n_segments = 2;
    int n_labels = 2;
    double dropout_rate = 0.1;
    // The MLM head is the tied word embedding plus a free output bias; the
    // bias can be switched off for a strict logits = hidden * W^T head.
    bool mlm_head_bias = true;

    void validate() const; // throws ConfigError
    bool operator==(const ModelConfig&) const = default;
};

struct LayerParams {
    Tensor attn_wq, attn_bq;
    Tensor attn_wk, attn_bk;
    Tensor attn_wv, attn_bv;
    Tensor attn_wo, attn_bo;
    Tensor ln1_gain, ln1_bias;
    Tensor ffn_w1, ffn_b1;
    Tensor ffn_w2, ffn_b2;
    Tensor ln2_gain, ln2_bias;
};

// All learnable weights. word_embedding is the single storage for W: the
// input embedding and the MLM output projection both read it (weight tying).
struct TransformerParams {
    ModelConfig config;
    Tensor word_embedding;     // [vocab_size, emb_size]
    Tensor position_embedding; // [max_seq_len, emb_size]
    Tensor segment_embedding;  // [n_segments, emb_size]
    Tensor embed_ln_gain, embed_ln_bias;
    std::vector<LayerParams> layers;
    Tensor mlm_bias;     // [vocab_size]
    Tensor classifier_w; // [emb_size, n_labels]
    Tensor classifier_b; // [n_labels]

    void for_each_param(const std::function<void(const std::string&, Tensor&)>& fn);
    void for_each_param(const std::function<void(const std::string&, const Tensor&)>& fn) const;
    std::vector<Tensor*> param_list();
    bool all_finite() const;
};

// Truncated normal (sigma 0.02, clipped at 2 sigma) for weights and
// embeddings, zeros for biases, ones for layer-norm gains.
TransformerParams init_params(const ModelConfig& config, std::uint64_t seed);

// Copies the embedding tables, embedding layer norm, MLM bias and the first
// n_layers encoder layers from the teacher; the classifier head is freshly
// initialized from seed. Every dimension except n_layers must match.
TransformerParams init_student_from_teacher(const TransformerParams& teacher,
                                            const ModelConfig& student_config,
                                            std::uint64_t seed);

std::uint64_t params_checksum(const TransformerParams& params);

// Counts actual encoder passes; smoothing asserts exactly one per instance.
struct ForwardStats {
    std::atomic<std::uint64_t> encoder_forwards{0};
};

// Per-layer attention probabilities, recorded when requested by tests.
struct EncoderTrace {
    std::vector<Tensor> attention_probs; // n_layers * n_heads entries, [S,S]
};

// Number of distribution-form embeddings constructed so far (process-wide).
// Lets tests assert that inference paths only ever use the id form.
std::uint64_t distribution_embed_count();

// ---- tape-level forward (training) ----

struct LiftedLayer {
    Value attn_wq, attn_bq, attn_wk, attn_bk, attn_wv, attn_bv, attn_wo, attn_bo;
    Value ln1_gain, ln1_bias;
    Value ffn_w1, ffn_b1, ffn_w2, ffn_b2;
    Value ln2_gain, ln2_bias;
};

struct LiftedParams {
    const ModelConfig* config = nullptr;
    Value word_embedding, position_embedding, segment_embedding;
    Value embed_ln_gain, embed_ln_bias;
    std::vector<LiftedLayer> layers;
    Value mlm_bias;
    Value classifier_w, classifier_b;

    // Gradients in the same order as TransformerParams::param_list().
    std::vector<const Tensor*> grad_list() const;
};

LiftedParams lift_params(Tape& tape, const TransformerParams& params, bool trainable);

// Token embedding + positional + segment embeddings. Linear in the token
// input; layer norm and dropout happen inside forward_encoder so that a
// distribution-form input mixes exactly like its expected embedding.
Value embed_input(Tape& tape, const LiftedParams& p, const std::vector<int>& token_ids,
                  const std::vector<int>& segment_ids);
// token distribution rows must sum to 1 within 1e-6. A one-hot row produces
// bit-identical output to the id form.
Value embed_input(Tape& tape, const LiftedParams& p, const Tensor& token_distributions,
                  const std::vector<int>& segment_ids);

// Post-layer-norm encoder stack over an embedded input. Masked positions get
// large negative attention logits (exp underflows to exactly zero weight).
// Dropout runs only when training is true and an rng stream is supplied.
Value forward_encoder(Tape& tape, const LiftedParams& p, Value embedded,
                      const std::vector<int>& attention_mask, bool training,
                      Rng* dropout_rng = nullptr, ForwardStats* stats = nullptr,
                      EncoderTrace* trace = nullptr);

// hidden * W^T (+ output bias when configured). Softmax is the caller's.
Value mlm_logits(Tape& tape, const LiftedParams& p, Value hidden);

// Linear head on the [CLS] position; returns [1, n_labels].
Value classify(Tape& tape, const LiftedParams& p, Value hidden);

// ---- plain-tensor forward (inference) ----

Tensor embed_input(const TransformerParams& params, const std::vector<int>& token_ids,
                   const std::vector<int>& segment_ids);
Tensor embed_input(const TransformerParams& params, const Tensor& token_distributions,
                   const std::vector<int>& segment_ids);
Tensor forward_encoder(const TransformerParams& params, const Tensor& embedded,
                       const std::vector<int>& attention_mask, bool training = false,
                       Rng* dropout_rng = nullptr, ForwardStats* stats = nullptr,
                       EncoderTrace* trace = nullptr);
Tensor mlm_logits(const TransformerParams& params, const Tensor& hidden);
Tensor classify(const TransformerParams& params, const Tensor& hidden);

} // namespace textsmooth
