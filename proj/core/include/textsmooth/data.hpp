#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "textsmooth/vocab.hpp"

namespace textsmooth {

// One encoded instance: token ids (the index form of the one-hot input),
// positions, segments, padding mask, class label.
//
// Layout invariants: position 0 is [CLS]; each segment ends with [SEP];
// padding only as a suffix, so attention_mask is monotone non-increasing.
struct EncodedInstance {
    std::vector<int> token_ids;
    std::vector<int> position_ids;   // 0..seq_len-1
    std::vector<int> segment_ids;    // 0 or 1
    std::vector<int> attention_mask; // 1 real, 0 padding
    int label = 0;

    int seq_len() const { return static_cast<int>(token_ids.size()); }
    bool operator==(const EncodedInstance&) const = default;
};

struct Dataset {
    std::vector<EncodedInstance> instances;
    std::vector<std::string> label_set; // dense ids in first-occurrence order
    int max_seq_len = 0;
    // Raw texts kept alongside for the writer and the sampler report.
    std::vector<std::string> texts_a;
    std::vector<std::string> texts_b; // empty string for single-sentence rows

    std::size_t size() const { return instances.size(); }
};

// [CLS] a... [SEP] (b... [SEP]) [PAD]...; segment 1 covers b and its [SEP].
// When over length, tokens are dropped from the tail of the currently longer
// segment (ties drop from b).
EncodedInstance encode_instance(const std::string& text_a,
                                const std::optional<std::string>& text_b,
                                int label, const Vocabulary& vocab,
                                int max_seq_len);

// UTF-8 TSV, one instance per line: label<TAB>text_a[<TAB>text_b]. No
// header; blank lines ignored. When fixed_label_set is given, unseen labels
// are an error; otherwise labels are registered in first-occurrence order.
Dataset load_dataset(const std::string& path, const Vocabulary& vocab,
                     int max_seq_len,
                     const std::vector<std::string>* fixed_label_set = nullptr);

void save_dataset(const Dataset& dataset, const std::string& path);

// Reads one raw text per line (for vocabulary building and MLM pretraining).
std::vector<std::string> load_corpus(const std::string& path);

std::uint64_t dataset_checksum(const Dataset& dataset);

} // namespace textsmooth
