#include "lesionkit/superpixels.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "lesionkit/errors.hpp"

namespace lesionkit {

std::vector<std::size_t> SuperpixelMap::segment_sizes() const {
    std::vector<std::size_t> sizes(count, 0);
    for (int label : labels) sizes[label] += 1;
    return sizes;
}

void SuperpixelMap::validate() const {
    if (labels.size() != static_cast<std::size_t>(height) * width) {
        throw ShapeError("superpixel map size mismatch");
    }
    const auto sizes = segment_sizes();  // throws on out-of-range via UB guard below
    for (int label : labels) {
        if (label < 0 || label >= count) {
            throw ShapeError("superpixel label out of range");
        }
    }
    for (std::size_t s = 0; s < sizes.size(); ++s) {
        if (sizes[s] == 0) {
            throw ShapeError("superpixel index " + std::to_string(s) + " is empty");
        }
    }
}

namespace {

// Relative weight of the intensity term against the S-normalized spatial
// coordinates. Large enough that a clear tone boundary beats geometry.
constexpr double kIntensityWeight = 4.0;

struct Centroid {
    double intensity = 0.0;
    double x = 0.0;
    double y = 0.0;
};

void choose_grid(int height, int width, int target, int& nx, int& ny) {
    ny = std::max(1, static_cast<int>(std::lround(std::sqrt(
                         static_cast<double>(target) * height / width))));
    nx = std::max(1, static_cast<int>(std::lround(
                         static_cast<double>(target) / ny)));
    ny = std::min(ny, height);
    nx = std::min(nx, width);
}

// Components below a quarter of the mean segment area merge into the
// already-resolved neighbor they first touch in scan order; everything else
// becomes its own segment. Returns the compacted, contiguous label map.
SuperpixelMap enforce_connectivity(int height, int width,
                                   std::size_t centroid_count,
                                   const std::vector<int>& assignment) {
    const std::size_t n = static_cast<std::size_t>(height) * width;
    const std::size_t min_size =
        std::max<std::size_t>(1, n / (4 * centroid_count));
    std::vector<int> comp(n, -1);

    SuperpixelMap out;
    out.height = height;
    out.width = width;
    out.labels.assign(n, -1);

    int next_segment = 0;
    int comp_count = 0;
    for (std::size_t start = 0; start < n; ++start) {
        if (comp[start] != -1) continue;
        const int cid = comp_count++;

        // Flood fill this component (4-connectivity, same k-means label).
        const int label = assignment[start];
        std::deque<std::size_t> queue{start};
        comp[start] = cid;
        std::vector<std::size_t> members;
        int adjacent_resolved = -1;  // first previously-resolved neighbor
        while (!queue.empty()) {
            const std::size_t p = queue.front();
            queue.pop_front();
            members.push_back(p);
            const int r = static_cast<int>(p) / width;
            const int c = static_cast<int>(p) % width;
            const int dr[] = {-1, 1, 0, 0};
            const int dc[] = {0, 0, -1, 1};
            for (int k = 0; k < 4; ++k) {
                const int rr = r + dr[k];
                const int cc = c + dc[k];
                if (rr < 0 || rr >= height || cc < 0 || cc >= width) continue;
                const std::size_t q = static_cast<std::size_t>(rr) * width + cc;
                if (assignment[q] == label && comp[q] == -1) {
                    comp[q] = cid;
                    queue.push_back(q);
                } else if (assignment[q] != label && out.labels[q] != -1 &&
                           adjacent_resolved == -1) {
                    adjacent_resolved = out.labels[q];
                }
            }
        }

        // The very first component has no resolved neighbor and always
        // stands alone.
        if (members.size() < min_size && adjacent_resolved != -1) {
            for (std::size_t p : members) out.labels[p] = adjacent_resolved;
        } else {
            for (std::size_t p : members) out.labels[p] = next_segment;
            ++next_segment;
        }
    }
    out.count = next_segment;
    return out;
}

std::vector<int> assign_nearest(const ImageTensor& img,
                                const std::vector<Centroid>& centroids,
                                double spatial_scale) {
    std::vector<int> assignment(img.pixel_count(), 0);
    std::size_t p = 0;
    for (int r = 0; r < img.height; ++r) {
        for (int c = 0; c < img.width; ++c, ++p) {
            const double intensity = img.gray(r, c);
            double best = std::numeric_limits<double>::infinity();
            int best_k = 0;
            for (std::size_t k = 0; k < centroids.size(); ++k) {
                const double di =
                    (intensity - centroids[k].intensity) * kIntensityWeight;
                const double dx = (c - centroids[k].x) / spatial_scale;
                const double dy = (r - centroids[k].y) / spatial_scale;
                const double dist = di * di + dx * dx + dy * dy;
                if (dist < best) {
                    best = dist;
                    best_k = static_cast<int>(k);
                }
            }
            assignment[p] = best_k;
        }
    }
    return assignment;
}

}  // namespace

SuperpixelMap slic_superpixels(const ImageTensor& img, int target_segments) {
    const std::size_t n = img.pixel_count();
    if (n == 0) throw ConfigError("superpixels: empty image");
    if (target_segments < 1 ||
        static_cast<std::size_t>(target_segments) > n) {
        throw ConfigError("superpixels: target segment count " +
                          std::to_string(target_segments) +
                          " outside [1, pixel count]");
    }

    int nx = 0, ny = 0;
    choose_grid(img.height, img.width, target_segments, nx, ny);
    std::vector<Centroid> centroids;
    centroids.reserve(static_cast<std::size_t>(nx) * ny);
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            Centroid c;
            c.x = (i + 0.5) * img.width / nx - 0.5;
            c.y = (j + 0.5) * img.height / ny - 0.5;
            const int px = std::clamp(static_cast<int>(std::lround(c.x)), 0,
                                      img.width - 1);
            const int py = std::clamp(static_cast<int>(std::lround(c.y)), 0,
                                      img.height - 1);
            c.intensity = img.gray(py, px);
            centroids.push_back(c);
        }
    }
    const double spatial_scale =
        std::sqrt(static_cast<double>(n) / centroids.size());

    std::vector<int> assignment;
    constexpr int kIterations = 10;
    for (int it = 0; it < kIterations; ++it) {
        assignment = assign_nearest(img, centroids, spatial_scale);

        std::vector<Centroid> sums(centroids.size());
        std::vector<std::size_t> counts(centroids.size(), 0);
        std::size_t p = 0;
        for (int r = 0; r < img.height; ++r) {
            for (int c = 0; c < img.width; ++c, ++p) {
                Centroid& s = sums[assignment[p]];
                s.intensity += img.gray(r, c);
                s.x += c;
                s.y += r;
                counts[assignment[p]] += 1;
            }
        }
        for (std::size_t k = 0; k < centroids.size(); ++k) {
            if (counts[k] == 0) continue;  // empty cluster keeps its seat
            centroids[k].intensity = sums[k].intensity / counts[k];
            centroids[k].x = sums[k].x / counts[k];
            centroids[k].y = sums[k].y / counts[k];
        }
    }
    // Final assignment so labels are consistent with the last centroids.
    assignment = assign_nearest(img, centroids, spatial_scale);

    SuperpixelMap map = enforce_connectivity(img.height, img.width,
                                             centroids.size(), assignment);
    map.validate();
    return map;
}

SuperpixelMap grid_superpixels(int height, int width, int target_segments) {
    if (height < 1 || width < 1) throw ConfigError("superpixels: empty image");
    if (target_segments < 1 ||
        static_cast<long long>(target_segments) >
            static_cast<long long>(height) * width) {
        throw ConfigError("superpixels: target segment count outside range");
    }
    int nx = 0, ny = 0;
    choose_grid(height, width, target_segments, nx, ny);

    SuperpixelMap map;
    map.height = height;
    map.width = width;
    map.count = nx * ny;
    map.labels.resize(static_cast<std::size_t>(height) * width);
    for (int r = 0; r < height; ++r) {
        const int ty = static_cast<int>(
            (static_cast<long long>(r) * ny) / height);
        for (int c = 0; c < width; ++c) {
            const int tx = static_cast<int>(
                (static_cast<long long>(c) * nx) / width);
            map.at(r, c) = ty * nx + tx;
        }
    }
    map.validate();
    return map;
}

ImageTensor draw_segment_boundaries(const ImageTensor& img,
                                    const SuperpixelMap& map, float r, float g,
                                    float b) {
    if (img.height != map.height || img.width != map.width) {
        throw ShapeError("boundary overlay: image/map shape mismatch");
    }
    ImageTensor out = to_rgb(img);
    for (int y = 0; y < map.height; ++y) {
        for (int x = 0; x < map.width; ++x) {
            const bool edge =
                (x + 1 < map.width && map.at(y, x) != map.at(y, x + 1)) ||
                (y + 1 < map.height && map.at(y, x) != map.at(y + 1, x));
            if (edge) {
                out.at(y, x, 0) = r;
                out.at(y, x, 1) = g;
                out.at(y, x, 2) = b;
            }
        }
    }
    return out;
}

}  // namespace lesionkit
