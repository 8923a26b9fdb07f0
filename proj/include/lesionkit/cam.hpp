#pragma once

#include <string>
#include <vector>

#include "lesionkit/cnn.hpp"
#include "lesionkit/image.hpp"

namespace lesionkit {

// H×W class-evidence map normalized to [0,1]; all zeros when the raw map
// is constant.
struct CamHeatmap {
    int height = 0;
    int width = 0;
    int class_index = 0;
    std::string class_name;
    std::vector<float> values;

    float at(int r, int c) const {
        return values[static_cast<std::size_t>(r) * width + c];
    }
};

// Head-weighted sum of the final conv maps, before upsampling or
// normalization. Kept separate so linearity in the head weights can be
// checked directly.
Tensor3 cam_raw(const ReferenceCnn& model, const ImageTensor& img,
                int class_index);

// cam_raw, bilinearly upsampled to the image size and min-max normalized.
CamHeatmap cam(const ReferenceCnn& model, const ImageTensor& img,
               int class_index);

// Blend of the image with a blue→red colormap of the heatmap. Opacity 0
// returns the image, 1 the pure colormap.
ImageTensor overlay(const ImageTensor& img, const CamHeatmap& heatmap,
                    double opacity);

}  // namespace lesionkit
