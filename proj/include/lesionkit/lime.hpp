#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lesionkit/cnn.hpp"
#include "lesionkit/image.hpp"
#include "lesionkit/rng.hpp"
#include "lesionkit/superpixels.hpp"

namespace lesionkit {

enum class OffColor { black, image_mean };

struct LimeConfig {
    int num_samples = 150;
    double kernel_width = 0.2;
    int top_k = 4;
    double ridge_lambda = 1e-3;
    int target_segments = 40;
    OffColor off_color = OffColor::image_mean;
    bool grid_segments = false;      // rectangular tiling instead of k-means
    bool rank_by_magnitude = false;  // rank |coefficient| instead of signed
    std::uint64_t seed = 0;

    void validate() const;
};

struct LimeExplanation {
    int target_class = 0;
    std::string target_class_name;
    double intercept = 0.0;
    std::vector<double> coefficients;     // one per superpixel
    std::vector<double> kernel_weights;   // one per perturbation sample
    std::vector<int> top_segments;        // descending signed coefficient
    SuperpixelMap segments;
    ImageTensor mask_image;  // top segments kept, the rest blanked

    std::string to_json() const;
};

// n rows of d Bernoulli(½) indicators; row 0 is all ones (the unperturbed
// image). Deterministic given the rng state.
std::vector<std::vector<std::uint8_t>> sample_perturbations(int d, int n,
                                                            Rng& rng);

// Segments flagged 0 are replaced with the off color (black or the
// per-channel image mean).
ImageTensor perturb_image(const ImageTensor& img, const SuperpixelMap& map,
                          const std::vector<std::uint8_t>& z,
                          OffColor off_color);

// Locality weight exp(−distance²/width²) where distance is the cosine
// distance from z to the all-ones vector: 1 − sqrt(k/d). The all-zero
// vector is defined to have distance 1.
double kernel_weight(const std::vector<std::uint8_t>& z, double kernel_width);

struct RidgeFit {
    std::vector<double> coefficients;
    double intercept = 0.0;
};

// Minimizes Σ wᵢ(yᵢ − β₀ − zᵢ·β)² + λ‖β‖² with an unpenalized intercept,
// via the normal equations and a Cholesky solve. Throws NumericError for a
// singular system (λ = 0 with collinear columns).
RidgeFit fit_weighted_ridge(const std::vector<std::vector<std::uint8_t>>& Z,
                            const std::vector<double>& y,
                            const std::vector<double>& weights, double lambda);

// Full pipeline against a precomputed segmentation: perturb, predict the
// probability of the classifier's own top class, kernel-weight, ridge-fit,
// rank segments.
LimeExplanation lime_explain(const BlackBoxClassifier& classifier,
                             const ImageTensor& img, const SuperpixelMap& map,
                             const LimeConfig& config, int threads = 1);

// Computes the segmentation per config first.
LimeExplanation lime_explain(const BlackBoxClassifier& classifier,
                             const ImageTensor& img, const LimeConfig& config,
                             int threads = 1);

}  // namespace lesionkit
