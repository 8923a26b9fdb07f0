#pragma once

#include <array>

#include "lesionkit/image.hpp"

namespace lesionkit {

// 2×2 linear part plus translation, acting on (x, y) points measured from
// the image center (x along columns, y along rows). Used both as the
// augmentation primitive and as a plain point map.
struct AffineTransform {
    // Row-major [[a00, a01], [a10, a11]].
    std::array<double, 4> a{1.0, 0.0, 0.0, 1.0};
    double tx = 0.0;
    double ty = 0.0;

    static AffineTransform identity() { return {}; }
    static AffineTransform rotation_degrees(double degrees);
    static AffineTransform scaling(double sx, double sy);
    static AffineTransform shearing(double s);  // [[1, s], [0, 1]]
    static AffineTransform translation(double tx, double ty);

    double det() const { return a[0] * a[3] - a[1] * a[2]; }
    bool invertible(double eps = 1e-9) const;

    // Throws NumericError when the linear part is singular.
    AffineTransform inverse() const;

    // this ∘ other: apply `other` first, then `this`.
    AffineTransform compose(const AffineTransform& other) const;

    std::array<double, 2> apply_point(double x, double y) const;
};

// Inverse-map every output pixel about the image center and sample the
// input bilinearly; reads outside the input return `fill`. Output has the
// input's dimensions. Throws NumericError for a singular transform.
ImageTensor apply_affine(const ImageTensor& img, const AffineTransform& t,
                         float fill = 0.0f);

}  // namespace lesionkit
