#include "superpix/color.hpp"

#include <algorithm>
#include <cmath>

namespace superpix {

namespace {

// D65 reference white, consistent with the row sums of the sRGB matrix below.
constexpr double kWhiteX = 0.950470;
constexpr double kWhiteY = 1.0;
constexpr double kWhiteZ = 1.088830;

constexpr double kEpsilon = 216.0 / 24389.0;
constexpr double kKappa = 24389.0 / 27.0;

double linearize(double v8) {
    const double v = v8 / 255.0;
    return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4);
}

double lab_f(double t) { return t > kEpsilon ? std::cbrt(t) : (kKappa * t + 16.0) / 116.0; }

}  // namespace

std::array<double, 3> srgb_to_lab(double r, double g, double b) {
    const double rl = linearize(r);
    const double gl = linearize(g);
    const double bl = linearize(b);
    const double x = 0.4124564 * rl + 0.3575761 * gl + 0.1804375 * bl;
    const double y = 0.2126729 * rl + 0.7151522 * gl + 0.0721750 * bl;
    const double z = 0.0193339 * rl + 0.1191920 * gl + 0.9503041 * bl;
    const double fx = lab_f(x / kWhiteX);
    const double fy = lab_f(y / kWhiteY);
    const double fz = lab_f(z / kWhiteZ);
    return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

LabImage rgb_to_lab(const Image& img) {
    if (img.channels() != 3) throw InvalidArgument("rgb_to_lab: expected a 3-channel image");
    LabImage lab(img.width(), img.height());
    for (std::size_t p = 0; p < img.pixel_count(); ++p) {
        const auto rgb = img.pixel(p);
        const auto v = srgb_to_lab(rgb[0], rgb[1], rgb[2]);
        double* out = lab.pixel(p);
        out[0] = v[0];
        out[1] = v[1];
        out[2] = v[2];
    }
    return lab;
}

LabImage to_lab_features(const Image& img) {
    if (img.channels() == 3) return rgb_to_lab(img);
    LabImage lab(img.width(), img.height());
    for (std::size_t p = 0; p < img.pixel_count(); ++p) {
        const double g = img.pixel(p)[0];
        const auto v = srgb_to_lab(g, g, g);
        std::copy(v.begin(), v.end(), lab.pixel(p));
    }
    return lab;
}

}  // namespace superpix
