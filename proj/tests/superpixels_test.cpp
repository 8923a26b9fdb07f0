#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "lesionkit/errors.hpp"
#include "lesionkit/superpixels.hpp"
#include "support.hpp"

using namespace lesionkit;

namespace {

ImageTensor two_tone(int h, int w, float left, float right) {
    ImageTensor img(h, w, 1);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
            img.at(r, c, 0) = c < w / 2 ? left : right;
    return img;
}

}  // namespace

TEST_CASE("target one yields a single segment covering the image") {
    const SuperpixelMap map =
        slic_superpixels(lktest::noise_image(9, 13, 3, 3), 1);
    CHECK(map.count == 1);
    for (int label : map.labels) CHECK(label == 0);
}

TEST_CASE("constant image splits into near-equal grid cells") {
    const SuperpixelMap map =
        slic_superpixels(lktest::constant_image(16, 16, 3, 0.42f), 4);
    CHECK(map.count == 4);
    for (std::size_t size : map.segment_sizes()) {
        CHECK(size == 64);  // exact quadrants
    }
    // Each segment is one connected rectangle-ish blob; spot-check corners.
    CHECK(map.at(0, 0) != map.at(0, 15));
    CHECK(map.at(0, 0) != map.at(15, 0));
    CHECK(map.at(15, 15) != map.at(0, 15));
}

TEST_CASE("two-tone image splits along the tone boundary") {
    const ImageTensor img = two_tone(16, 16, 0.1f, 0.9f);
    const SuperpixelMap map = slic_superpixels(img, 2);
    REQUIRE(map.count == 2);

    // The boundary must sit on the tone edge within one pixel.
    for (int r = 0; r < 16; ++r) {
        for (int c = 0; c < 16; ++c) {
            if (c <= 6) CHECK(map.at(r, c) == map.at(r, 0));
            if (c >= 9) CHECK(map.at(r, c) == map.at(r, 15));
        }
    }
    CHECK(map.at(0, 0) != map.at(0, 15));

    // Brute-force oracle: every pixel sits with the nearer centroid in the
    // (weighted intensity, x/S, y/S) feature space, centroids being the
    // feature means of the final segments.
    const double S = std::sqrt(16.0 * 16.0 / 2.0);
    const double wc = 4.0;
    struct Feat {
        double i, x, y;
    };
    std::vector<Feat> mean(2, {0, 0, 0});
    std::vector<std::size_t> count(2, 0);
    for (int r = 0; r < 16; ++r) {
        for (int c = 0; c < 16; ++c) {
            Feat& m = mean[map.at(r, c)];
            m.i += img.at(r, c, 0);
            m.x += c;
            m.y += r;
            count[map.at(r, c)] += 1;
        }
    }
    for (int s = 0; s < 2; ++s) {
        mean[s].i /= count[s];
        mean[s].x /= count[s];
        mean[s].y /= count[s];
    }
    for (int r = 0; r < 16; ++r) {
        for (int c = 0; c < 16; ++c) {
            std::array<double, 2> dist{};
            for (int s = 0; s < 2; ++s) {
                const double di = (img.at(r, c, 0) - mean[s].i) * wc;
                const double dx = (c - mean[s].x) / S;
                const double dy = (r - mean[s].y) / S;
                dist[s] = di * di + dx * dx + dy * dy;
            }
            const int assigned = map.at(r, c);
            CHECK(dist[assigned] <= dist[1 - assigned] + 1e-12);
        }
    }
}

TEST_CASE("segmentation is deterministic") {
    const ImageTensor img = lktest::smooth_image(32, 24, 3);
    const SuperpixelMap a = slic_superpixels(img, 12);
    const SuperpixelMap b = slic_superpixels(img, 12);
    CHECK(a.labels == b.labels);
    CHECK(a.count == b.count);
}

TEST_CASE("every segment index is occupied and labels are in range") {
    const SuperpixelMap map =
        slic_superpixels(lktest::noise_image(40, 40, 3, 77), 20);
    CHECK_NOTHROW(map.validate());
    CHECK(map.count >= 2);
    for (std::size_t size : map.segment_sizes()) CHECK(size >= 1);
}

TEST_CASE("segments are contiguous") {
    const SuperpixelMap map =
        slic_superpixels(lktest::noise_image(24, 24, 3, 5), 9);
    // Flood fill each segment from its first pixel; the component must
    // cover the whole segment.
    const auto sizes = map.segment_sizes();
    for (int s = 0; s < map.count; ++s) {
        int first = -1;
        for (std::size_t i = 0; i < map.labels.size(); ++i) {
            if (map.labels[i] == s) {
                first = static_cast<int>(i);
                break;
            }
        }
        REQUIRE(first >= 0);
        std::set<int> seen{first};
        std::vector<int> stack{first};
        while (!stack.empty()) {
            const int p = stack.back();
            stack.pop_back();
            const int r = p / map.width, c = p % map.width;
            const int dr[] = {-1, 1, 0, 0}, dc[] = {0, 0, -1, 1};
            for (int k = 0; k < 4; ++k) {
                const int rr = r + dr[k], cc = c + dc[k];
                if (rr < 0 || rr >= map.height || cc < 0 || cc >= map.width)
                    continue;
                const int q = rr * map.width + cc;
                if (map.labels[q] == s && !seen.count(q)) {
                    seen.insert(q);
                    stack.push_back(q);
                }
            }
        }
        CHECK(seen.size() == sizes[s]);
    }
}

TEST_CASE("degenerate targets are rejected") {
    const ImageTensor img = lktest::constant_image(4, 4, 1, 0.5f);
    CHECK_THROWS_AS(slic_superpixels(img, 0), ConfigError);
    CHECK_THROWS_AS(slic_superpixels(img, 17), ConfigError);
    CHECK_THROWS_AS(grid_superpixels(4, 4, 0), ConfigError);
}

TEST_CASE("grid mode tiles the image evenly") {
    const SuperpixelMap map = grid_superpixels(12, 12, 9);
    CHECK(map.count == 9);
    CHECK_NOTHROW(map.validate());
    for (std::size_t size : map.segment_sizes()) CHECK(size == 16);
    CHECK(map.at(0, 0) == 0);
    CHECK(map.at(11, 11) == 8);
}

TEST_CASE("boundary overlay paints only segment borders") {
    const ImageTensor img = lktest::constant_image(8, 8, 3, 0.5f);
    const SuperpixelMap map = grid_superpixels(8, 8, 4);
    const ImageTensor out = draw_segment_boundaries(img, map, 1.0f, 0.0f, 0.0f);
    CHECK(out.at(0, 3, 0) == 1.0f);  // vertical border column
    CHECK(out.at(0, 3, 1) == 0.0f);
    CHECK(out.at(0, 0, 0) == 0.5f);  // interior untouched
}
