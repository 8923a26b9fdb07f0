#pragma once

#include <filesystem>

#include "lesionkit/image.hpp"

namespace lesionkit {

// Decode a PNG or JPEG file to a 3-channel tensor with intensities in [0,1].
// The format is detected from the file signature, not the extension.
ImageTensor decode_image(const std::filesystem::path& path);

// decode_image followed by a bilinear resize to target_h × target_w.
ImageTensor load_image(const std::filesystem::path& path, int target_h,
                       int target_w);

// 8-bit PNG, intensities rescaled by round(255·v). Grayscale for 1 channel,
// RGB for 3.
void save_png(const ImageTensor& img, const std::filesystem::path& path);

}  // namespace lesionkit
