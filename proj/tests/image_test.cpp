#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <vector>

#include <jpeglib.h>

#include "lesionkit/errors.hpp"
#include "lesionkit/image.hpp"
#include "lesionkit/image_io.hpp"
#include "support.hpp"

using namespace lesionkit;
using lktest::TempDir;

namespace {

// Independent bilinear evaluation (half-pixel centers, edge clamp) used as
// the oracle for resize_bilinear.
double bilinear_oracle(const std::vector<double>& row, int in_w, int out_w,
                       int x) {
    const double sx = (x + 0.5) * (static_cast<double>(in_w) / out_w) - 0.5;
    const int x0 = static_cast<int>(std::floor(sx));
    const double f = sx - x0;
    auto clamped = [&](int i) {
        return row[std::clamp(i, 0, in_w - 1)];
    };
    return clamped(x0) * (1.0 - f) + clamped(x0 + 1) * f;
}

void write_jpeg(const ImageTensor& img, const lktest::fs::path& path,
                int quality) {
    jpeg_compress_struct cinfo;
    jpeg_error_mgr jerr;
    cinfo.err = jpeg_std_error(&jerr);
    jpeg_create_compress(&cinfo);
    std::FILE* f = std::fopen(path.string().c_str(), "wb");
    REQUIRE(f != nullptr);
    jpeg_stdio_dest(&cinfo, f);
    cinfo.image_width = img.width;
    cinfo.image_height = img.height;
    cinfo.input_components = 3;
    cinfo.in_color_space = JCS_RGB;
    jpeg_set_defaults(&cinfo);
    jpeg_set_quality(&cinfo, quality, TRUE);
    jpeg_start_compress(&cinfo, TRUE);
    std::vector<unsigned char> row(static_cast<std::size_t>(img.width) * 3);
    while (cinfo.next_scanline < cinfo.image_height) {
        for (int c = 0; c < img.width; ++c)
            for (int ch = 0; ch < 3; ++ch)
                row[c * 3 + ch] = static_cast<unsigned char>(
                    std::lround(255.0 * img.at(cinfo.next_scanline, c, ch)));
        unsigned char* rp = row.data();
        jpeg_write_scanlines(&cinfo, &rp, 1);
    }
    jpeg_finish_compress(&cinfo);
    jpeg_destroy_compress(&cinfo);
    std::fclose(f);
}

}  // namespace

TEST_CASE("png round trip preserves 8-bit intensities") {
    TempDir dir("png");
    ImageTensor img = lktest::noise_image(5, 7, 3, 17);
    // Snap to the 8-bit lattice so the round trip is exact.
    for (auto& v : img.data) v = std::round(v * 255.0f) / 255.0f;
    save_png(img, dir.path / "img.png");
    const ImageTensor back = decode_image(dir.path / "img.png");
    CHECK(back.height == 5);
    CHECK(back.width == 7);
    CHECK(back.channels == 3);
    CHECK(lktest::max_abs_diff(img, back) < 1e-6);
}

TEST_CASE("white png loads as all ones at identity size") {
    TempDir dir("white");
    save_png(lktest::constant_image(2, 2, 3, 1.0f), dir.path / "w.png");
    const ImageTensor img = load_image(dir.path / "w.png", 2, 2);
    for (float v : img.data) CHECK(v == doctest::Approx(1.0f));
}

TEST_CASE("black png downsizes to all zeros") {
    TempDir dir("black");
    save_png(lktest::constant_image(4, 4, 3, 0.0f), dir.path / "b.png");
    const ImageTensor img = load_image(dir.path / "b.png", 2, 2);
    CHECK(img.height == 2);
    for (float v : img.data) CHECK(v == 0.0f);
}

TEST_CASE("grayscale png expands to three channels") {
    TempDir dir("gray");
    save_png(lktest::constant_image(3, 3, 1, 0.5f), dir.path / "g.png");
    const ImageTensor img = decode_image(dir.path / "g.png");
    CHECK(img.channels == 3);
    CHECK(img.at(1, 1, 0) == img.at(1, 1, 2));
}

TEST_CASE("bilinear upsample of a 1x2 ramp matches the hand formula") {
    ImageTensor img(1, 2, 1);
    img.at(0, 0, 0) = 0.0f;
    img.at(0, 1, 0) = 1.0f;

    const ImageTensor out = resize_bilinear(img, 1, 4);

    // Hand evaluation of the half-pixel-center formula at each output x:
    // sx = (x+0.5)/2 - 0.5 → -0.25, 0.25, 0.75, 1.25 → 0, 0.25, 0.75, 1.
    const std::vector<double> frozen{0.0, 0.25, 0.75, 1.0};
    const std::vector<double> src{0.0, 1.0};
    for (int x = 0; x < 4; ++x) {
        CHECK(bilinear_oracle(src, 2, 4, x) == doctest::Approx(frozen[x]));
        CHECK(out.at(0, x, 0) == doctest::Approx(frozen[x]));
    }
}

TEST_CASE("constant image is invariant under resize") {
    const ImageTensor img = lktest::constant_image(9, 5, 3, 0.37f);
    const ImageTensor out = resize_bilinear(img, 4, 13);
    for (float v : out.data) CHECK(v == doctest::Approx(0.37f).epsilon(1e-6));
}

TEST_CASE("jpeg decodes close to the encoded image") {
    TempDir dir("jpeg");
    const ImageTensor img = lktest::smooth_image(32, 32, 3);
    write_jpeg(img, dir.path / "img.jpg", 95);
    const ImageTensor back = decode_image(dir.path / "img.jpg");
    CHECK(back.height == 32);
    CHECK(back.channels == 3);
    double mae = 0.0;
    for (std::size_t i = 0; i < img.data.size(); ++i)
        mae += std::abs(img.data[i] - back.data[i]);
    mae /= img.data.size();
    CHECK(mae < 0.02);
}

TEST_CASE("format detection is signature based") {
    TempDir dir("fmt");
    SUBCASE("missing file is an io error") {
        CHECK_THROWS_AS(decode_image(dir.path / "nope.png"), IoError);
    }
    SUBCASE("text file is a format error") {
        std::ofstream(dir.path / "fake.png") << "not an image";
        CHECK_THROWS_AS(decode_image(dir.path / "fake.png"), FormatError);
    }
    SUBCASE("truncated png is a format error") {
        save_png(lktest::constant_image(8, 8, 3, 0.5f), dir.path / "ok.png");
        std::ifstream in(dir.path / "ok.png", std::ios::binary);
        std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                                std::istreambuf_iterator<char>());
        std::ofstream out(dir.path / "cut.png", std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
        out.close();
        CHECK_THROWS_AS(decode_image(dir.path / "cut.png"), FormatError);
    }
}

TEST_CASE("horizontal flip definition, involution and symmetry") {
    ImageTensor img(1, 2, 1);
    img.at(0, 0, 0) = 0.3f;
    img.at(0, 1, 0) = 0.7f;
    const ImageTensor flipped = flip_horizontal(img);
    CHECK(flipped.at(0, 0, 0) == doctest::Approx(0.7f));
    CHECK(flipped.at(0, 1, 0) == doctest::Approx(0.3f));

    const ImageTensor noise = lktest::noise_image(6, 9, 3, 3);
    CHECK(lktest::max_abs_diff(flip_horizontal(flip_horizontal(noise)), noise) ==
          0.0);

    // Mirror-symmetric image is a fixed point.
    ImageTensor sym(4, 4, 1);
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c)
            sym.at(r, c, 0) = 0.1f * static_cast<float>(std::min(c, 3 - c) + r);
    CHECK(lktest::max_abs_diff(flip_horizontal(sym), sym) == 0.0);
}

TEST_CASE("tensor validation rejects broken invariants") {
    ImageTensor img = lktest::constant_image(2, 2, 1, 0.5f);
    CHECK_NOTHROW(img.validate());
    img.data[0] = 1.5f;
    CHECK_THROWS_AS(img.validate(), NumericError);
    img.data[0] = 0.5f;
    img.data.pop_back();
    CHECK_THROWS_AS(img.validate(), ShapeError);
}
