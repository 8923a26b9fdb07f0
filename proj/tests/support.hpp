#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>

#include "lesionkit/image.hpp"
#include "lesionkit/rng.hpp"

namespace lktest {

namespace fs = std::filesystem;

// Unique scratch directory removed on destruction.
struct TempDir {
    fs::path path;

    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() /
               ("lesionkit_" + tag + "_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
};

inline lesionkit::ImageTensor constant_image(int h, int w, int c, float v) {
    return lesionkit::ImageTensor(h, w, c, v);
}

// Smooth low-frequency intensity field; bilinear resampling of it is
// nearly lossless, unlike noise.
inline lesionkit::ImageTensor smooth_image(int h, int w, int channels,
                                           double phase = 0.0) {
    lesionkit::ImageTensor img(h, w, channels);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            for (int ch = 0; ch < channels; ++ch) {
                const double v =
                    0.5 + 0.4 * std::sin(2.0 * M_PI * (c + phase) / w + ch) *
                              std::sin(2.0 * M_PI * (r - phase) / h);
                img.at(r, c, ch) = static_cast<float>(v);
            }
        }
    }
    return img;
}

inline lesionkit::ImageTensor noise_image(int h, int w, int channels,
                                          std::uint64_t seed) {
    lesionkit::Rng rng(seed);
    lesionkit::ImageTensor img(h, w, channels);
    for (auto& v : img.data) v = static_cast<float>(rng.unit());
    return img;
}

inline double max_abs_diff(const lesionkit::ImageTensor& a,
                           const lesionkit::ImageTensor& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        worst = std::max(worst, std::abs(static_cast<double>(a.data[i]) -
                                         static_cast<double>(b.data[i])));
    }
    return worst;
}

}  // namespace lktest
