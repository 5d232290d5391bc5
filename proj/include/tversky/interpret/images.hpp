#pragma once

#include <string>

#include "tversky/autodiff/tensor.hpp"

namespace tversky {

// One grayscale PGM per row, per-image min-max normalized to [0,255]
// (constant rows export as mid-gray 128). Rows must reshape to height*width.
// Returns the written paths: <dir>/<prefix>_<index><epoch_tag>.pgm
template <class T>
std::vector<std::string> export_prototype_images(const Tensor<T>& rows, int64_t height,
                                                 int64_t width, const std::string& dir,
                                                 const std::string& prefix,
                                                 const std::string& epoch_tag = "");

}  // namespace tversky
