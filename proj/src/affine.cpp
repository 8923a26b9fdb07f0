#include "lesionkit/affine.hpp"

#include <cmath>

#include "lesionkit/errors.hpp"

namespace lesionkit {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

// Snap values a hair away from {-1, 0, 1} so that axis-aligned rotations
// (90°, 180°, 270°) map the pixel grid onto itself exactly.
double snap_unit(double v) {
    const double r = std::round(v);
    return (std::abs(v - r) < 1e-12 && std::abs(r) <= 1.0) ? r : v;
}

}  // namespace

AffineTransform AffineTransform::rotation_degrees(double degrees) {
    const double rad = degrees * kPi / 180.0;
    const double c = snap_unit(std::cos(rad));
    const double s = snap_unit(std::sin(rad));
    AffineTransform t;
    t.a = {c, -s, s, c};
    return t;
}

AffineTransform AffineTransform::scaling(double sx, double sy) {
    AffineTransform t;
    t.a = {sx, 0.0, 0.0, sy};
    return t;
}

AffineTransform AffineTransform::shearing(double s) {
    AffineTransform t;
    t.a = {1.0, s, 0.0, 1.0};
    return t;
}

AffineTransform AffineTransform::translation(double tx, double ty) {
    AffineTransform t;
    t.tx = tx;
    t.ty = ty;
    return t;
}

bool AffineTransform::invertible(double eps) const {
    return std::isfinite(det()) && std::abs(det()) > eps;
}

AffineTransform AffineTransform::inverse() const {
    const double d = det();
    if (!invertible()) throw NumericError("affine transform is singular");
    AffineTransform inv;
    inv.a = {a[3] / d, -a[1] / d, -a[2] / d, a[0] / d};
    // p = A q + t  =>  q = A⁻¹ p − A⁻¹ t
    inv.tx = -(inv.a[0] * tx + inv.a[1] * ty);
    inv.ty = -(inv.a[2] * tx + inv.a[3] * ty);
    return inv;
}

AffineTransform AffineTransform::compose(const AffineTransform& other) const {
    AffineTransform out;
    out.a = {a[0] * other.a[0] + a[1] * other.a[2],
             a[0] * other.a[1] + a[1] * other.a[3],
             a[2] * other.a[0] + a[3] * other.a[2],
             a[2] * other.a[1] + a[3] * other.a[3]};
    out.tx = a[0] * other.tx + a[1] * other.ty + tx;
    out.ty = a[2] * other.tx + a[3] * other.ty + ty;
    return out;
}

std::array<double, 2> AffineTransform::apply_point(double x, double y) const {
    return {a[0] * x + a[1] * y + tx, a[2] * x + a[3] * y + ty};
}

ImageTensor apply_affine(const ImageTensor& img, const AffineTransform& t,
                         float fill) {
    const AffineTransform inv = t.inverse();  // throws when singular

    ImageTensor out(img.height, img.width, img.channels, fill);
    const double cx = (img.width - 1) / 2.0;
    const double cy = (img.height - 1) / 2.0;

    for (int r = 0; r < img.height; ++r) {
        for (int c = 0; c < img.width; ++c) {
            const auto [sx, sy] = inv.apply_point(c - cx, r - cy);
            const double src_x = sx + cx;
            const double src_y = sy + cy;
            const int x0 = static_cast<int>(std::floor(src_x));
            const int y0 = static_cast<int>(std::floor(src_y));
            const double fx = src_x - x0;
            const double fy = src_y - y0;
            for (int ch = 0; ch < img.channels; ++ch) {
                auto read = [&](int yy, int xx) -> double {
                    if (yy < 0 || yy >= img.height || xx < 0 || xx >= img.width)
                        return fill;
                    return img.at(yy, xx, ch);
                };
                const double top = read(y0, x0) * (1.0 - fx) + read(y0, x0 + 1) * fx;
                const double bot =
                    read(y0 + 1, x0) * (1.0 - fx) + read(y0 + 1, x0 + 1) * fx;
                out.at(r, c, ch) = static_cast<float>(top * (1.0 - fy) + bot * fy);
            }
        }
    }
    return out;
}

}  // namespace lesionkit
