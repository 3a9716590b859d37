#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "textsmooth/data.hpp"
#include "textsmooth/model.hpp"
#include "textsmooth/tensor.hpp"

namespace textsmooth {

struct SmoothingConfig {
    // Mixing weight on the original one-hot encoding; 1 keeps the raw text,
    // 0 keeps only the teacher's word distributions.
    double lambda = 0.5;
    // [CLS]/[SEP] rows stay exactly one-hot when set. Padding rows are
    // always exempt regardless.
    bool exempt_special_tokens = false;

    void validate() const;
};

// One element of the smoothed corpus: per-position word distributions plus
// the untouched positions, segments, mask and label.
struct SmoothedInstance {
    Tensor distributions; // [seq_len, vocab_size], row-stochastic
    std::vector<int> token_ids; // original ids, kept for reference
    std::vector<int> position_ids;
    std::vector<int> segment_ids;
    std::vector<int> attention_mask;
    int label = 0;

    int seq_len() const { return static_cast<int>(token_ids.size()); }
};

// Teacher word distributions for every position: softmax over the tied MLM
// logits of one inference-mode encoder pass. No mask corruption is applied
// (the instance is fed exactly as encoded) and no dropout runs; the teacher
// must be the pretrained model, never a task-fine-tuned one.
Tensor mlm_distribution(const TransformerParams& teacher, const EncodedInstance& instance,
                        ForwardStats* stats = nullptr);

// Per non-exempt position: lambda * onehot(token) + (1-lambda) * mlm row.
SmoothedInstance smooth_text(const EncodedInstance& instance, const Tensor& mlm_dist,
                             const SmoothingConfig& config);

struct SmoothResult {
    std::vector<SmoothedInstance> instances;
    std::uint64_t teacher_forwards = 0; // exactly one per instance
};

SmoothResult smooth_dataset(const TransformerParams& teacher, const Dataset& dataset,
                            const SmoothingConfig& config);

// Cache file: header (version, lambda, flags, teacher checksum, N, seq_len,
// vocab_size) then per instance the carried metadata and the dense rows.
// Round trips bit-exactly.
void save_smoothed_cache(const std::string& path, const SmoothResult& result,
                         const SmoothingConfig& config, std::uint64_t teacher_checksum,
                         int vocab_size);

struct SmoothedCache {
    SmoothingConfig config;
    std::uint64_t teacher_checksum = 0;
    int vocab_size = 0;
    SmoothResult result;
};

SmoothedCache load_smoothed_cache(const std::string& path);

} // namespace textsmooth
