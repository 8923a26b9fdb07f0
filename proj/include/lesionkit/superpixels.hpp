#pragma once

#include <vector>

#include "lesionkit/image.hpp"

namespace lesionkit {

// Per-pixel segment indices in [0, count); every index is occupied.
struct SuperpixelMap {
    int height = 0;
    int width = 0;
    int count = 0;
    std::vector<int> labels;  // row-major

    int at(int r, int c) const { return labels[static_cast<std::size_t>(r) * width + c]; }
    int& at(int r, int c) { return labels[static_cast<std::size_t>(r) * width + c]; }
    std::vector<std::size_t> segment_sizes() const;
    void validate() const;
};

// Grid-seeded k-means over (intensity, x, y) with fixed iteration count and
// a connectivity cleanup, so the result is contiguous and deterministic.
// The realized segment count may drift from the target. Throws ConfigError
// for a target outside [1, pixel count].
SuperpixelMap slic_superpixels(const ImageTensor& img, int target_segments);

// Plain rectangular tiling with roughly √target × √target cells. Used where
// a perfectly predictable geometry matters more than image adaptivity.
SuperpixelMap grid_superpixels(int height, int width, int target_segments);

// Copy of the image with segment borders painted in the given color.
ImageTensor draw_segment_boundaries(const ImageTensor& img,
                                    const SuperpixelMap& map, float r, float g,
                                    float b);

}  // namespace lesionkit
