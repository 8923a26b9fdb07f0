#pragma once

#include <cstddef>
#include <vector>

namespace lesionkit {

// H×W×C raster, row-major (row, column, channel), intensities in [0,1].
// Every pixel value the toolkit touches goes through this type.
struct ImageTensor {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<float> data;

    ImageTensor() = default;
    ImageTensor(int h, int w, int c, float fill = 0.0f);

    float& at(int r, int c, int ch) {
        return data[(static_cast<std::size_t>(r) * width + c) * channels + ch];
    }
    float at(int r, int c, int ch) const {
        return data[(static_cast<std::size_t>(r) * width + c) * channels + ch];
    }

    std::size_t pixel_count() const {
        return static_cast<std::size_t>(height) * width;
    }
    bool same_shape(const ImageTensor& o) const {
        return height == o.height && width == o.width && channels == o.channels;
    }

    // Mean intensity across channels at one pixel.
    float gray(int r, int c) const;

    // Throws ShapeError / NumericError when the invariants are broken
    // (length mismatch, non-finite or out-of-range values).
    void validate() const;
};

// Single-channel copy holding the per-pixel channel mean.
ImageTensor to_gray(const ImageTensor& img);

// 3-channel copy (replicates a single channel; passes 3-channel through).
ImageTensor to_rgb(const ImageTensor& img);

// Bilinear resize with half-pixel-centered sampling and edge clamping.
// A constant image stays constant under any target size.
ImageTensor resize_bilinear(const ImageTensor& img, int out_h, int out_w);

// Column order reversed per row; applying it twice restores the input.
ImageTensor flip_horizontal(const ImageTensor& img);

ImageTensor flip_vertical(const ImageTensor& img);

}  // namespace lesionkit
