#include "lesionkit/segment.hpp"

#include <algorithm>

#include "lesionkit/errors.hpp"

namespace lesionkit {

void SegmentationConfig::validate() const {
    if (!(lo <= hi)) throw ConfigError("segmentation bounds must satisfy lo ≤ hi");
    if (lo < 0.0f || hi > 1.0f) {
        throw ConfigError("segmentation bounds must lie in [0,1]");
    }
}

namespace {

float select_channel(const ImageTensor& img, int r, int c,
                     ChannelSelector sel) {
    switch (sel) {
        case ChannelSelector::gray:
            return img.gray(r, c);
        case ChannelSelector::red:
            return img.at(r, c, 0);
        case ChannelSelector::green:
            return img.at(r, c, img.channels > 1 ? 1 : 0);
        case ChannelSelector::blue:
            return img.at(r, c, img.channels > 1 ? 2 : 0);
    }
    return 0.0f;
}

}  // namespace

SegmentationResult threshold_segment(const ImageTensor& img,
                                     const SegmentationConfig& config) {
    config.validate();
    if ((config.channel == ChannelSelector::green ||
         config.channel == ChannelSelector::blue) &&
        img.channels < 3) {
        throw ShapeError("channel selector needs a 3-channel image");
    }

    SegmentationResult result;
    result.mask = ImageTensor(img.height, img.width, 1, 0.0f);

    int row0 = img.height, col0 = img.width, row1 = -1, col1 = -1;
    for (int r = 0; r < img.height; ++r) {
        for (int c = 0; c < img.width; ++c) {
            const float v = select_channel(img, r, c, config.channel);
            if (v >= config.lo && v <= config.hi) {
                result.mask.at(r, c, 0) = 1.0f;
                row0 = std::min(row0, r);
                col0 = std::min(col0, c);
                row1 = std::max(row1, r);
                col1 = std::max(col1, c);
            }
        }
    }
    if (row1 < 0) {
        return result;  // empty mask: no roi, empty segmented output
    }
    result.roi = BoundingBox{row0, col0, row1, col1};

    const BoundingBox& box = *result.roi;
    result.segmented = ImageTensor(box.height(), box.width(), img.channels, 0.0f);
    for (int r = 0; r < box.height(); ++r) {
        for (int c = 0; c < box.width(); ++c) {
            if (result.mask.at(box.row0 + r, box.col0 + c, 0) == 0.0f) continue;
            for (int ch = 0; ch < img.channels; ++ch) {
                result.segmented.at(r, c, ch) =
                    img.at(box.row0 + r, box.col0 + c, ch);
            }
        }
    }
    return result;
}

ImageTensor draw_box(const ImageTensor& img, const BoundingBox& box, float r,
                     float g, float b) {
    ImageTensor out = to_rgb(img);
    auto paint = [&](int y, int x) {
        if (y < 0 || y >= out.height || x < 0 || x >= out.width) return;
        out.at(y, x, 0) = r;
        out.at(y, x, 1) = g;
        out.at(y, x, 2) = b;
    };
    for (int x = box.col0; x <= box.col1; ++x) {
        paint(box.row0, x);
        paint(box.row1, x);
    }
    for (int y = box.row0; y <= box.row1; ++y) {
        paint(y, box.col0);
        paint(y, box.col1);
    }
    return out;
}

}  // namespace lesionkit
