#pragma once

#include <cstdint>

#include "lesionkit/affine.hpp"
#include "lesionkit/image.hpp"
#include "lesionkit/rng.hpp"

namespace lesionkit {

// Sampling ranges for the random augmentation pipeline. Rotation is in
// degrees, shear is the dimensionless off-diagonal term, scale multiplies
// each axis independently and translation is a fraction of width/height.
struct AugmentationPolicy {
    double flip_horizontal_prob = 0.5;
    double flip_vertical_prob = 0.0;  // off by default
    double rotation_min_deg = 0.0;
    double rotation_max_deg = 0.0;
    double shear_min = 0.0;
    double shear_max = 0.0;
    double scale_min = 1.0;
    double scale_max = 1.0;
    double translate_fraction = 0.0;
    float fill_value = 0.0f;  // black background
    std::uint64_t seed = 0;

    // Common defaults: horizontal flips, full rotation, shear up to 0.2,
    // scale 0.8–1.2, 10% shifts.
    static AugmentationPolicy standard(std::uint64_t seed);

    // Throws ConfigError when a range leaves its allowed interval
    // (shear ⊆ [0,0.2], rotation ⊆ [0,360), probabilities in [0,1], ...).
    void validate() const;
};

struct SampledAugmentation {
    bool flip_horizontal = false;
    bool flip_vertical = false;
    AffineTransform transform;
};

// Draw one augmentation: rotation, shear and per-axis scale uniform in
// their ranges, translation uniform in ±translate_fraction×dimension,
// composed as scale ∘ shear ∘ rotate plus the translation. Flips are drawn
// with their configured probabilities. Deterministic given the rng state.
SampledAugmentation sample_augmentation(const AugmentationPolicy& policy,
                                        int width, int height, Rng& rng);

// Sample, apply flips, then the affine warp with the policy's fill value.
ImageTensor augment(const ImageTensor& img, const AugmentationPolicy& policy,
                    Rng& rng);

// Augment with a child seed derived from (policy.seed, index). Results do
// not depend on which worker processes which index.
ImageTensor augment_indexed(const ImageTensor& img,
                            const AugmentationPolicy& policy,
                            std::uint64_t index);

}  // namespace lesionkit
