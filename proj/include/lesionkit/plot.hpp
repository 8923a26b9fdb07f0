#pragma once

#include <string>
#include <vector>

#include "lesionkit/image.hpp"

namespace lesionkit {

struct PlotSeries {
    std::vector<double> values;  // one point per epoch/index
    float r = 0.0f, g = 0.0f, b = 0.0f;
};

// Minimal line chart: white canvas, black axes, one polyline per series,
// y-range padded around the data. Enough to eyeball training curves; the
// CSVs stay the canonical record.
ImageTensor render_line_chart(const std::vector<PlotSeries>& series,
                              int width = 640, int height = 480);

}  // namespace lesionkit
