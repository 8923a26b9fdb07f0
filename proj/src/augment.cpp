#include "lesionkit/augment.hpp"

#include <string>

#include "lesionkit/errors.hpp"

namespace lesionkit {

namespace {

void check_range(double lo, double hi, double min_allowed, double max_allowed,
                 const char* what) {
    if (!(lo <= hi) || lo < min_allowed || hi > max_allowed) {
        throw ConfigError(std::string(what) + " range [" + std::to_string(lo) +
                          ", " + std::to_string(hi) + "] outside [" +
                          std::to_string(min_allowed) + ", " +
                          std::to_string(max_allowed) + "]");
    }
}

void check_prob(double p, const char* what) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw ConfigError(std::string(what) + " probability " +
                          std::to_string(p) + " outside [0,1]");
    }
}

}  // namespace

AugmentationPolicy AugmentationPolicy::standard(std::uint64_t seed) {
    AugmentationPolicy p;
    p.flip_horizontal_prob = 0.5;
    p.rotation_min_deg = 0.0;
    p.rotation_max_deg = 360.0;
    p.shear_min = 0.0;
    p.shear_max = 0.2;
    p.scale_min = 0.8;
    p.scale_max = 1.2;
    p.translate_fraction = 0.10;
    p.seed = seed;
    return p;
}

void AugmentationPolicy::validate() const {
    check_prob(flip_horizontal_prob, "horizontal flip");
    check_prob(flip_vertical_prob, "vertical flip");
    // Draws are half-open, so max 360 still keeps θ inside [0, 360).
    check_range(rotation_min_deg, rotation_max_deg, 0.0, 360.0, "rotation");
    check_range(shear_min, shear_max, 0.0, 0.2, "shear");
    check_range(scale_min, scale_max, 1e-6, 100.0, "scale");
    if (!(translate_fraction >= 0.0 && translate_fraction <= 0.5)) {
        throw ConfigError("translate fraction " +
                          std::to_string(translate_fraction) +
                          " outside [0, 0.5]");
    }
    if (!(fill_value >= 0.0f && fill_value <= 1.0f)) {
        throw ConfigError("fill value outside [0,1]");
    }
}

SampledAugmentation sample_augmentation(const AugmentationPolicy& policy,
                                        int width, int height, Rng& rng) {
    SampledAugmentation s;
    // Fixed draw order keeps a (seed, policy) pair fully reproducible.
    s.flip_horizontal = rng.bernoulli(policy.flip_horizontal_prob);
    s.flip_vertical = rng.bernoulli(policy.flip_vertical_prob);
    const double theta = rng.range(policy.rotation_min_deg, policy.rotation_max_deg);
    const double shear = rng.range(policy.shear_min, policy.shear_max);
    const double sx = rng.range(policy.scale_min, policy.scale_max);
    const double sy = rng.range(policy.scale_min, policy.scale_max);
    const double tx = rng.range(-policy.translate_fraction * width,
                                policy.translate_fraction * width);
    const double ty = rng.range(-policy.translate_fraction * height,
                                policy.translate_fraction * height);

    s.transform = AffineTransform::scaling(sx, sy)
                      .compose(AffineTransform::shearing(shear))
                      .compose(AffineTransform::rotation_degrees(theta));
    s.transform.tx = tx;
    s.transform.ty = ty;
    return s;
}

ImageTensor augment(const ImageTensor& img, const AugmentationPolicy& policy,
                    Rng& rng) {
    policy.validate();
    const SampledAugmentation s =
        sample_augmentation(policy, img.width, img.height, rng);
    ImageTensor work = img;
    if (s.flip_horizontal) work = flip_horizontal(work);
    if (s.flip_vertical) work = flip_vertical(work);
    return apply_affine(work, s.transform, policy.fill_value);
}

ImageTensor augment_indexed(const ImageTensor& img,
                            const AugmentationPolicy& policy,
                            std::uint64_t index) {
    Rng rng(mix_seed(policy.seed, index));
    return augment(img, policy, rng);
}

}  // namespace lesionkit
