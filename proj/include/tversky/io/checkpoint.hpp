#pragma once

#include <map>
#include <string>

#include <json.hpp>

#include "tversky/autodiff/tensor.hpp"

namespace tversky {

// Flat binary checkpoint: magic "TVCK", version u32, JSON meta blob, then a
// named tensor table (name, dtype tag, dims, little-endian payload). Writes
// are atomic; re-saving identical state is byte-identical.
inline constexpr uint32_t kCheckpointMagic = 0x5456434Bu;  // "TVCK"
inline constexpr uint32_t kCheckpointVersion = 1;

struct Checkpoint {
    nlohmann::json meta;
    std::map<std::string, Tensor<float>> tensors;
};

void save_checkpoint(const std::string& path, const nlohmann::json& meta,
                     const std::vector<std::pair<std::string, const Tensor<float>*>>& tensors);

Checkpoint load_checkpoint(const std::string& path);

}  // namespace tversky
