#include "lesionkit/image.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lesionkit/errors.hpp"

namespace lesionkit {

ImageTensor::ImageTensor(int h, int w, int c, float fill)
    : height(h), width(w), channels(c) {
    if (h < 0 || w < 0 || (c != 1 && c != 3)) {
        throw ShapeError("ImageTensor: invalid shape " + std::to_string(h) + "x" +
                         std::to_string(w) + "x" + std::to_string(c));
    }
    data.assign(static_cast<std::size_t>(h) * w * c, fill);
}

float ImageTensor::gray(int r, int c) const {
    float sum = 0.0f;
    for (int ch = 0; ch < channels; ++ch) sum += at(r, c, ch);
    return sum / static_cast<float>(channels);
}

void ImageTensor::validate() const {
    const std::size_t expected =
        static_cast<std::size_t>(height) * width * channels;
    if (data.size() != expected) {
        throw ShapeError("ImageTensor: data length " + std::to_string(data.size()) +
                         " does not match shape " + std::to_string(height) + "x" +
                         std::to_string(width) + "x" + std::to_string(channels));
    }
    if (channels != 1 && channels != 3) {
        throw ShapeError("ImageTensor: channel count must be 1 or 3");
    }
    for (float v : data) {
        if (!std::isfinite(v) || v < 0.0f || v > 1.0f) {
            throw NumericError("ImageTensor: intensity outside [0,1]");
        }
    }
}

ImageTensor to_gray(const ImageTensor& img) {
    if (img.channels == 1) return img;
    ImageTensor out(img.height, img.width, 1);
    for (int r = 0; r < img.height; ++r)
        for (int c = 0; c < img.width; ++c) out.at(r, c, 0) = img.gray(r, c);
    return out;
}

ImageTensor to_rgb(const ImageTensor& img) {
    if (img.channels == 3) return img;
    ImageTensor out(img.height, img.width, 3);
    for (int r = 0; r < img.height; ++r)
        for (int c = 0; c < img.width; ++c)
            for (int ch = 0; ch < 3; ++ch) out.at(r, c, ch) = img.at(r, c, 0);
    return out;
}

namespace {

// Sample with coordinates clamped to the valid grid.
float sample_clamped(const ImageTensor& img, int r, int c, int ch) {
    r = std::clamp(r, 0, img.height - 1);
    c = std::clamp(c, 0, img.width - 1);
    return img.at(r, c, ch);
}

}  // namespace

ImageTensor resize_bilinear(const ImageTensor& img, int out_h, int out_w) {
    if (img.height <= 0 || img.width <= 0)
        throw ShapeError("resize_bilinear: empty input");
    if (out_h <= 0 || out_w <= 0)
        throw ShapeError("resize_bilinear: empty target size");

    ImageTensor out(out_h, out_w, img.channels);
    const double sy = static_cast<double>(img.height) / out_h;
    const double sx = static_cast<double>(img.width) / out_w;
    for (int r = 0; r < out_h; ++r) {
        const double src_y = (r + 0.5) * sy - 0.5;
        const int y0 = static_cast<int>(std::floor(src_y));
        const double fy = src_y - y0;
        for (int c = 0; c < out_w; ++c) {
            const double src_x = (c + 0.5) * sx - 0.5;
            const int x0 = static_cast<int>(std::floor(src_x));
            const double fx = src_x - x0;
            for (int ch = 0; ch < img.channels; ++ch) {
                const double v00 = sample_clamped(img, y0, x0, ch);
                const double v01 = sample_clamped(img, y0, x0 + 1, ch);
                const double v10 = sample_clamped(img, y0 + 1, x0, ch);
                const double v11 = sample_clamped(img, y0 + 1, x0 + 1, ch);
                const double top = v00 * (1.0 - fx) + v01 * fx;
                const double bot = v10 * (1.0 - fx) + v11 * fx;
                out.at(r, c, ch) = static_cast<float>(top * (1.0 - fy) + bot * fy);
            }
        }
    }
    return out;
}

ImageTensor flip_horizontal(const ImageTensor& img) {
    ImageTensor out(img.height, img.width, img.channels);
    for (int r = 0; r < img.height; ++r)
        for (int c = 0; c < img.width; ++c)
            for (int ch = 0; ch < img.channels; ++ch)
                out.at(r, c, ch) = img.at(r, img.width - 1 - c, ch);
    return out;
}

ImageTensor flip_vertical(const ImageTensor& img) {
    ImageTensor out(img.height, img.width, img.channels);
    for (int r = 0; r < img.height; ++r)
        for (int c = 0; c < img.width; ++c)
            for (int ch = 0; ch < img.channels; ++ch)
                out.at(r, c, ch) = img.at(img.height - 1 - r, c, ch);
    return out;
}

}  // namespace lesionkit
