#include "superpix/filter.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace superpix {

Image bilateral_filter(const Image& img, const BilateralParams& params) {
    if (params.radius < 1) throw InvalidArgument("bilateral_filter: radius must be >= 1");
    if (!(params.sigma_s > 0.0) || !(params.sigma_r > 0.0)) {
        throw InvalidArgument("bilateral_filter: sigmas must be > 0");
    }
    const int r = params.radius;
    const int side = 2 * r + 1;
    std::vector<double> spatial(static_cast<std::size_t>(side) * side);
    for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
            spatial[(dy + r) * side + (dx + r)] =
                std::exp(-(dx * dx + dy * dy) / (2.0 * params.sigma_s * params.sigma_s));
        }
    }
    const double range_scale = -1.0 / (2.0 * params.sigma_r * params.sigma_r);
    const int w = img.width();
    const int h = img.height();
    const int nc = img.channels();
    Image out(w, h, nc);
    std::vector<double> acc(nc);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const auto center = img.pixel(static_cast<std::size_t>(y) * w + x);
            std::fill(acc.begin(), acc.end(), 0.0);
            double total = 0.0;
            for (int yy = std::max(0, y - r); yy <= std::min(h - 1, y + r); ++yy) {
                for (int xx = std::max(0, x - r); xx <= std::min(w - 1, x + r); ++xx) {
                    const auto q = img.pixel(static_cast<std::size_t>(yy) * w + xx);
                    double d2 = 0.0;
                    for (int c = 0; c < nc; ++c) d2 += (q[c] - center[c]) * (q[c] - center[c]);
                    const double weight = spatial[(yy - y + r) * side + (xx - x + r)] * std::exp(d2 * range_scale);
                    total += weight;
                    for (int c = 0; c < nc; ++c) acc[c] += weight * q[c];
                }
            }
            auto dst = out.pixel(static_cast<std::size_t>(y) * w + x);
            for (int c = 0; c < nc; ++c) dst[c] = acc[c] / total;
        }
    }
    return out;
}

}  // namespace superpix
