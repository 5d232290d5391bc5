#pragma once

#include <string>
#include <vector>

#include "tversky/autodiff/tensor.hpp"

namespace tversky {

// A loaded image-classification split: pixels scaled to [0,1].
struct DatasetHandle {
    Tensor<float> images;          // [N,1,28,28]
    std::vector<int64_t> labels;   // N class indices
    std::string split;

    int64_t size() const { return images.shape.empty() ? 0 : images.shape[0]; }
};

// Big-endian IDX pair (magic 0x00000803 images / 0x00000801 labels). Counts
// and dimensions are validated; parse errors name the byte offset.
DatasetHandle load_idx(const std::string& images_path, const std::string& labels_path,
                       const std::string& split_tag = "");

// Serialization used by tests and the synthetic pipeline check.
void save_idx(const DatasetHandle& ds, const std::string& images_path,
              const std::string& labels_path);

}  // namespace tversky
