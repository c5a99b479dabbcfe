#pragma once

#include "superpix/image.hpp"

namespace superpix {

struct BilateralParams {
    int radius = 3;         // pixels; window is (2r+1)^2
    double sigma_s = 2.0;   // pixels
    double sigma_r = 10.0;  // 8-bit intensity units
};

/// Edge-preserving smoothing. Range distance is Euclidean over all channels, so the
/// same weights apply to every channel. Windows are clipped at the frame and renormalised.
Image bilateral_filter(const Image& img, const BilateralParams& params = {});

}  // namespace superpix
