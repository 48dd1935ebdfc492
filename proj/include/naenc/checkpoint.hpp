#pragma once

#include <map>
#include <string>

#include "naenc/encoder.hpp"

namespace naenc {

// Checkpoint container: a JSON header carrying the encoder config and the
// vocabulary hash, followed by named tensors stored as little-endian 64-bit
// floats. Round-trips bit-exactly.
void save_checkpoint(const std::string& path,
                     const ModelParams& params,
                     const EncoderStackConfig& config,
                     const std::string& vocab_hash_hex);

struct LoadedCheckpoint {
    EncoderStackConfig config;
    std::string vocab_hash_hex;
    std::map<std::string, Tensor> tensors;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

// Rebuilds the parameter structure from the stored config and fills every
// tensor from the checkpoint; missing or misshapen tensors are errors.
ModelParams restore_model(const LoadedCheckpoint& checkpoint);

} // namespace naenc
