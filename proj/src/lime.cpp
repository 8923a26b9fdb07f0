#include "lesionkit/lime.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "lesionkit/errors.hpp"
#include "lesionkit/parallel.hpp"

#include <json.hpp>

namespace lesionkit {

void LimeConfig::validate() const {
    if (num_samples < 2) throw ConfigError("LIME needs at least 2 samples");
    if (!(kernel_width > 0.0)) throw ConfigError("kernel width must be > 0");
    if (top_k < 1) throw ConfigError("top-k must be ≥ 1");
    if (ridge_lambda < 0.0) throw ConfigError("ridge lambda must be ≥ 0");
    if (target_segments < 1) throw ConfigError("target segments must be ≥ 1");
}

std::vector<std::vector<std::uint8_t>> sample_perturbations(int d, int n,
                                                            Rng& rng) {
    if (d < 1 || n < 1) throw ConfigError("perturbations need d ≥ 1, n ≥ 1");
    std::vector<std::vector<std::uint8_t>> rows(
        n, std::vector<std::uint8_t>(d, 1));
    for (int i = 1; i < n; ++i) {
        for (int j = 0; j < d; ++j) {
            rows[i][j] = rng.bernoulli(0.5) ? 1 : 0;
        }
    }
    return rows;
}

namespace {

std::vector<float> off_color_values(const ImageTensor& img, OffColor mode) {
    std::vector<float> color(img.channels, 0.0f);
    if (mode == OffColor::image_mean) {
        std::vector<double> sums(img.channels, 0.0);
        for (int r = 0; r < img.height; ++r)
            for (int c = 0; c < img.width; ++c)
                for (int ch = 0; ch < img.channels; ++ch)
                    sums[ch] += img.at(r, c, ch);
        const double inv = 1.0 / static_cast<double>(img.pixel_count());
        for (int ch = 0; ch < img.channels; ++ch)
            color[ch] = static_cast<float>(sums[ch] * inv);
    }
    return color;
}

}  // namespace

ImageTensor perturb_image(const ImageTensor& img, const SuperpixelMap& map,
                          const std::vector<std::uint8_t>& z,
                          OffColor off_color) {
    if (img.height != map.height || img.width != map.width) {
        throw ShapeError("perturb_image: image/map shape mismatch");
    }
    if (static_cast<int>(z.size()) != map.count) {
        throw std::invalid_argument("perturb_image: mask length " +
                                    std::to_string(z.size()) + " != segment count " +
                                    std::to_string(map.count));
    }
    const std::vector<float> color = off_color_values(img, off_color);
    ImageTensor out = img;
    for (int r = 0; r < img.height; ++r) {
        for (int c = 0; c < img.width; ++c) {
            if (z[map.at(r, c)]) continue;
            for (int ch = 0; ch < img.channels; ++ch)
                out.at(r, c, ch) = color[ch];
        }
    }
    return out;
}

double kernel_weight(const std::vector<std::uint8_t>& z, double kernel_width) {
    if (z.empty()) throw std::invalid_argument("kernel_weight: empty vector");
    const std::size_t ones =
        static_cast<std::size_t>(std::count(z.begin(), z.end(), 1));
    const double distance =
        ones == 0 ? 1.0
                  : 1.0 - std::sqrt(static_cast<double>(ones) /
                                    static_cast<double>(z.size()));
    return std::exp(-(distance * distance) / (kernel_width * kernel_width));
}

RidgeFit fit_weighted_ridge(const std::vector<std::vector<std::uint8_t>>& Z,
                            const std::vector<double>& y,
                            const std::vector<double>& weights, double lambda) {
    const std::size_t n = Z.size();
    if (n < 2) throw std::invalid_argument("ridge fit needs n ≥ 2");
    if (y.size() != n || weights.size() != n) {
        throw std::invalid_argument("ridge fit: row count mismatch");
    }
    const std::size_t d = Z.front().size();
    double weight_sum = 0.0;
    for (double w : weights) {
        if (w < 0.0) throw std::invalid_argument("ridge fit: negative weight");
        weight_sum += w;
    }
    if (!(weight_sum > 0.0)) {
        throw std::invalid_argument("ridge fit: all weights are zero");
    }
    if (lambda < 0.0) throw std::invalid_argument("ridge fit: negative lambda");

    // Normal equations on the intercept-augmented design, intercept
    // unpenalized: A = XᵀWX + λ·diag(0,1,…,1), b = XᵀWy.
    const std::size_t m = d + 1;
    std::vector<double> A(m * m, 0.0);
    std::vector<double> b(m, 0.0);
    std::vector<double> xi(m, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (Z[i].size() != d) {
            throw std::invalid_argument("ridge fit: ragged design matrix");
        }
        const double w = weights[i];
        if (w == 0.0) continue;
        for (std::size_t j = 0; j < d; ++j) xi[j + 1] = Z[i][j];
        for (std::size_t r = 0; r < m; ++r) {
            if (xi[r] == 0.0) continue;
            const double wr = w * xi[r];
            b[r] += wr * y[i];
            for (std::size_t c = r; c < m; ++c) {
                A[r * m + c] += wr * xi[c];
            }
        }
    }
    for (std::size_t r = 1; r < m; ++r) A[r * m + r] += lambda;
    for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < r; ++c) A[r * m + c] = A[c * m + r];

    // Cholesky factorization; a non-positive pivot marks a singular system.
    double max_diag = 0.0;
    for (std::size_t r = 0; r < m; ++r) max_diag = std::max(max_diag, A[r * m + r]);
    std::vector<double> L(m * m, 0.0);
    for (std::size_t r = 0; r < m; ++r) {
        for (std::size_t c = 0; c <= r; ++c) {
            double sum = A[r * m + c];
            for (std::size_t k = 0; k < c; ++k) sum -= L[r * m + k] * L[c * m + k];
            if (r == c) {
                if (sum <= 1e-12 * std::max(1.0, max_diag)) {
                    throw NumericError(
                        "ridge system is singular; use a positive lambda");
                }
                L[r * m + r] = std::sqrt(sum);
            } else {
                L[r * m + c] = sum / L[c * m + c];
            }
        }
    }
    auto solve = [&](const std::vector<double>& rhs) {
        std::vector<double> t(m, 0.0);
        for (std::size_t r = 0; r < m; ++r) {
            double sum = rhs[r];
            for (std::size_t k = 0; k < r; ++k) sum -= L[r * m + k] * t[k];
            t[r] = sum / L[r * m + r];
        }
        std::vector<double> x(m, 0.0);
        for (std::size_t r = m; r-- > 0;) {
            double sum = t[r];
            for (std::size_t k = r + 1; k < m; ++k) sum -= L[k * m + r] * x[k];
            x[r] = sum / L[r * m + r];
        }
        return x;
    };

    std::vector<double> beta = solve(b);
    auto residual = [&]() {
        std::vector<double> res(m, 0.0);
        for (std::size_t r = 0; r < m; ++r) {
            double acc = b[r];
            for (std::size_t c = 0; c < m; ++c) acc -= A[r * m + c] * beta[c];
            res[r] = acc;
        }
        return res;
    };
    // One step of iterative refinement tightens the residual to rounding
    // level before it is checked.
    std::vector<double> res = residual();
    const std::vector<double> correction = solve(res);
    for (std::size_t r = 0; r < m; ++r) beta[r] += correction[r];
    res = residual();
    double res_norm = 0.0;
    double b_norm = 1.0;
    for (std::size_t r = 0; r < m; ++r) {
        res_norm = std::max(res_norm, std::abs(res[r]));
        b_norm = std::max(b_norm, std::abs(b[r]));
    }
    if (res_norm > 1e-8 * b_norm) {
        throw NumericError("ridge normal equations did not solve cleanly");
    }

    RidgeFit fit;
    fit.intercept = beta[0];
    fit.coefficients.assign(beta.begin() + 1, beta.end());
    return fit;
}

LimeExplanation lime_explain(const BlackBoxClassifier& classifier,
                             const ImageTensor& img, const SuperpixelMap& map,
                             const LimeConfig& config, int threads) {
    config.validate();
    const int d = map.count;
    const int n = config.num_samples;

    Rng rng(config.seed);
    const auto Z = sample_perturbations(d, n, rng);

    const auto base_rows = classifier.predict({img});
    if (base_rows.size() != 1 || base_rows[0].empty()) {
        throw ShapeError("classifier returned no probability row");
    }
    const int target = static_cast<int>(
        std::max_element(base_rows[0].begin(), base_rows[0].end()) -
        base_rows[0].begin());

    // Perturbed predictions; slot-indexed so the thread count cannot change
    // the result. Classifier failures are rethrown with the sample range.
    std::vector<double> y(n, 0.0);
    parallel_chunks(static_cast<std::size_t>(n), threads,
                    [&](std::size_t begin, std::size_t end) {
                        std::vector<ImageTensor> chunk;
                        chunk.reserve(end - begin);
                        for (std::size_t i = begin; i < end; ++i) {
                            chunk.push_back(
                                perturb_image(img, map, Z[i], config.off_color));
                        }
                        std::vector<std::vector<double>> rows;
                        try {
                            rows = classifier.predict(chunk);
                        } catch (const std::exception& e) {
                            throw NumericError(
                                "classifier failed on perturbation samples " +
                                std::to_string(begin) + ".." +
                                std::to_string(end - 1) + ": " + e.what());
                        }
                        if (rows.size() != end - begin) {
                            throw ShapeError("classifier row count mismatch");
                        }
                        for (std::size_t i = begin; i < end; ++i) {
                            y[i] = rows[i - begin][target];
                        }
                    });

    std::vector<double> weights(n, 0.0);
    for (int i = 0; i < n; ++i) weights[i] = kernel_weight(Z[i], config.kernel_width);

    const RidgeFit fit = fit_weighted_ridge(Z, y, weights, config.ridge_lambda);

    LimeExplanation exp;
    exp.target_class = target;
    exp.target_class_name = classifier.class_names().empty()
                                ? std::to_string(target)
                                : classifier.class_names().at(target);
    exp.intercept = fit.intercept;
    exp.coefficients = fit.coefficients;
    exp.kernel_weights = weights;
    exp.segments = map;

    std::vector<int> order(d);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        if (config.rank_by_magnitude) {
            return std::abs(fit.coefficients[a]) > std::abs(fit.coefficients[b]);
        }
        return fit.coefficients[a] > fit.coefficients[b];
    });
    const int keep = std::min(config.top_k, d);
    exp.top_segments.assign(order.begin(), order.begin() + keep);

    std::vector<std::uint8_t> mask(d, 0);
    for (int s : exp.top_segments) mask[s] = 1;
    exp.mask_image = perturb_image(img, map, mask, config.off_color);
    return exp;
}

LimeExplanation lime_explain(const BlackBoxClassifier& classifier,
                             const ImageTensor& img, const LimeConfig& config,
                             int threads) {
    config.validate();
    const SuperpixelMap map =
        config.grid_segments
            ? grid_superpixels(img.height, img.width, config.target_segments)
            : slic_superpixels(img, config.target_segments);
    return lime_explain(classifier, img, map, config, threads);
}

std::string LimeExplanation::to_json() const {
    nlohmann::json j;
    j["target_class"] = target_class;
    j["target_class_name"] = target_class_name;
    j["intercept"] = intercept;
    j["coefficients"] = coefficients;
    j["top_segments"] = top_segments;
    j["segment_count"] = segments.count;
    j["segment_sizes"] = segments.segment_sizes();
    double wmin = 1.0, wmax = 0.0, wsum = 0.0;
    for (double w : kernel_weights) {
        wmin = std::min(wmin, w);
        wmax = std::max(wmax, w);
        wsum += w;
    }
    j["kernel"] = {
        {"samples", kernel_weights.size()},
        {"min_weight", wmin},
        {"max_weight", wmax},
        {"mean_weight",
         kernel_weights.empty() ? 0.0 : wsum / kernel_weights.size()}};
    return j.dump(2) + "\n";
}

}  // namespace lesionkit
