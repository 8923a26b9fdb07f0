#include "lesionkit/plot.hpp"

#include <algorithm>
#include <cmath>

#include "lesionkit/errors.hpp"

namespace lesionkit {

namespace {

void draw_line(ImageTensor& img, int x0, int y0, int x1, int y1, float r,
               float g, float b) {
    const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
    const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    for (;;) {
        if (y0 >= 0 && y0 < img.height && x0 >= 0 && x0 < img.width) {
            img.at(y0, x0, 0) = r;
            img.at(y0, x0, 1) = g;
            img.at(y0, x0, 2) = b;
        }
        if (x0 == x1 && y0 == y1) break;
        const int e2 = 2 * err;
        if (e2 >= dy) {
            err += dy;
            x0 += sx;
        }
        if (e2 <= dx) {
            err += dx;
            y0 += sy;
        }
    }
}

}  // namespace

ImageTensor render_line_chart(const std::vector<PlotSeries>& series, int width,
                              int height) {
    if (width < 64 || height < 64) throw ConfigError("chart size too small");

    ImageTensor canvas(height, width, 3, 1.0f);  // white
    const int margin = 32;
    const int x0 = margin, x1 = width - margin / 2;
    const int y0 = margin / 2, y1 = height - margin;

    // Axes.
    draw_line(canvas, x0, y1, x1, y1, 0, 0, 0);
    draw_line(canvas, x0, y0, x0, y1, 0, 0, 0);

    double lo = 0.0, hi = 1.0;
    std::size_t points = 0;
    bool first = true;
    for (const auto& s : series) {
        for (double v : s.values) {
            if (first) {
                lo = hi = v;
                first = false;
            } else {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        }
        points = std::max(points, s.values.size());
    }
    if (points == 0) return canvas;
    if (hi - lo < 1e-12) {
        lo -= 0.5;
        hi += 0.5;
    }
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;

    for (const auto& s : series) {
        if (s.values.empty()) continue;
        int px = -1, py = -1;
        for (std::size_t i = 0; i < s.values.size(); ++i) {
            const double tx =
                s.values.size() == 1
                    ? 0.0
                    : static_cast<double>(i) / (s.values.size() - 1);
            const int cx = x0 + static_cast<int>(std::lround(tx * (x1 - x0)));
            const double ty = (s.values[i] - lo) / (hi - lo);
            const int cy = y1 - static_cast<int>(std::lround(ty * (y1 - y0)));
            if (px >= 0) draw_line(canvas, px, py, cx, cy, s.r, s.g, s.b);
            px = cx;
            py = cy;
        }
    }
    return canvas;
}

}  // namespace lesionkit
