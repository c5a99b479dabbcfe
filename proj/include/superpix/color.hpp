#pragma once

#include <array>

#include "superpix/image.hpp"

namespace superpix {

/// sRGB (8-bit scale) to CIELAB under the D65 white point.
std::array<double, 3> srgb_to_lab(double r, double g, double b);

/// Per-pixel sRGB -> XYZ -> CIELAB. Throws InvalidArgument for 1-channel input.
LabImage rgb_to_lab(const Image& img);

/// Lab features for any image; grayscale samples are replicated to RGB first.
LabImage to_lab_features(const Image& img);

}  // namespace superpix
