#pragma once

#include <optional>

#include "lesionkit/image.hpp"

namespace lesionkit {

enum class ChannelSelector { red, green, blue, gray };

struct SegmentationConfig {
    ChannelSelector channel = ChannelSelector::gray;
    float lo = 0.0f;
    float hi = 1.0f;

    void validate() const;  // lo ≤ hi, both in [0,1]
};

struct BoundingBox {
    int row0 = 0, col0 = 0;  // inclusive
    int row1 = 0, col1 = 0;  // inclusive
    int height() const { return row1 - row0 + 1; }
    int width() const { return col1 - col0 + 1; }
};

struct SegmentationResult {
    ImageTensor mask;  // single channel, {0,1}
    std::optional<BoundingBox> roi;
    ImageTensor segmented;  // masked input cropped to roi; empty when no roi
};

// mask = 1 where the selected channel lies in [lo, hi]; roi is the tight
// bounding box of the mask; segmented = img·mask cropped to roi. An empty
// mask is a valid result with no roi.
SegmentationResult threshold_segment(const ImageTensor& img,
                                     const SegmentationConfig& config);

// The input with the box outline painted in the given color.
ImageTensor draw_box(const ImageTensor& img, const BoundingBox& box, float r,
                     float g, float b);

}  // namespace lesionkit
