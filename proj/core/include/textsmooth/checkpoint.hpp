#pragma once

#include <string>

#include "textsmooth/model.hpp"
#include "textsmooth/vocab.hpp"

namespace textsmooth {

// Single-file binary checkpoint, little-endian:
//   magic "TSCKPT1\n", format version, ModelConfig fields, vocabulary
//   (tokens in id order), then each named tensor as name + shape + row-major
//   64-bit float payload. Loading rejects version, name, or shape mismatches.
void save_checkpoint(const std::string& path, const TransformerParams& params,
                     const Vocabulary& vocab);

struct Checkpoint {
    TransformerParams params;
    Vocabulary vocab;
};

Checkpoint load_checkpoint(const std::string& path);

} // namespace textsmooth
