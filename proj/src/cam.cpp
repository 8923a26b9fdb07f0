#include "lesionkit/cam.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lesionkit/errors.hpp"

namespace lesionkit {

Tensor3 cam_raw(const ReferenceCnn& model, const ImageTensor& img,
                int class_index) {
    if (model.num_conv_blocks() == 0) {
        throw ShapeError("CAM needs at least one conv block before GAP");
    }
    const int classes = model.arch().num_classes();
    if (class_index < 0 || class_index >= classes) {
        throw std::invalid_argument("CAM class index out of range");
    }
    const Tensor3 maps = model.final_conv_maps(img);
    const ParamBlock& head =
        model.params().blocks[model.params().blocks.size() - 2];

    Tensor3 raw(1, maps.height, maps.width);
    for (int c = 0; c < maps.channels; ++c) {
        const double w =
            static_cast<double>(head.values[c * classes + class_index]);
        if (w == 0.0) continue;
        for (int y = 0; y < maps.height; ++y)
            for (int x = 0; x < maps.width; ++x)
                raw.at(0, y, x) += w * maps.at(c, y, x);
    }
    return raw;
}

CamHeatmap cam(const ReferenceCnn& model, const ImageTensor& img,
               int class_index) {
    const Tensor3 raw = cam_raw(model, img, class_index);

    // Move the raw map into an image so the shared bilinear resampler can
    // upscale it; the [0,1] image range does not apply until normalization,
    // so shift/scale into range first and undo after.
    double lo = raw.v[0], hi = raw.v[0];
    for (double v : raw.v) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }

    CamHeatmap heat;
    heat.height = img.height;
    heat.width = img.width;
    heat.class_index = class_index;
    heat.class_name = model.arch().class_names[class_index];
    heat.values.assign(static_cast<std::size_t>(img.height) * img.width, 0.0f);
    if (hi - lo <= 0.0) {
        return heat;  // constant raw map
    }

    ImageTensor staged(raw.height, raw.width, 1);
    for (int y = 0; y < raw.height; ++y)
        for (int x = 0; x < raw.width; ++x)
            staged.at(y, x, 0) =
                static_cast<float>((raw.at(0, y, x) - lo) / (hi - lo));
    const ImageTensor up = resize_bilinear(staged, img.height, img.width);

    // Renormalize: interpolation can shave the extremes slightly.
    float ulo = up.data[0], uhi = up.data[0];
    for (float v : up.data) {
        ulo = std::min(ulo, v);
        uhi = std::max(uhi, v);
    }
    const float span = uhi - ulo;
    for (std::size_t i = 0; i < up.data.size(); ++i) {
        heat.values[i] = span > 0.0f ? (up.data[i] - ulo) / span : 0.0f;
    }
    return heat;
}

ImageTensor overlay(const ImageTensor& img, const CamHeatmap& heatmap,
                    double opacity) {
    if (img.height != heatmap.height || img.width != heatmap.width) {
        throw ShapeError("overlay: image/heatmap shape mismatch");
    }
    if (!(opacity >= 0.0 && opacity <= 1.0)) {
        throw std::invalid_argument("overlay opacity outside [0,1]");
    }
    ImageTensor out = to_rgb(img);
    for (int r = 0; r < out.height; ++r) {
        for (int c = 0; c < out.width; ++c) {
            const double v = heatmap.at(r, c);
            // Linear blue→red ramp: v=0 is pure blue, v=1 pure red.
            const double map[3] = {v, 0.0, 1.0 - v};
            for (int ch = 0; ch < 3; ++ch) {
                out.at(r, c, ch) = static_cast<float>(
                    (1.0 - opacity) * out.at(r, c, ch) + opacity * map[ch]);
            }
        }
    }
    return out;
}

}  // namespace lesionkit
