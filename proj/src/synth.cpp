#include "superpix/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "superpix/noise.hpp"
#include "superpix/raster.hpp"
#include "superpix/slic.hpp"

namespace superpix::synth {

LabelMap square_tiling(int width, int height, int side) {
    if (side < 1) throw InvalidArgument("square_tiling: side must be >= 1");
    const int cols = (width + side - 1) / side;
    LabelMap m(width, height);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) m.at(x, y) = (y / side) * cols + x / side;
    return m;
}

LabelMap hex_tiling(int width, int height, double radius) {
    if (!(radius > 0.5)) throw InvalidArgument("hex_tiling: radius must exceed half a pixel");
    const double dx = std::sqrt(3.0) * radius;  // horizontal spacing
    const double dy = 1.5 * radius;             // row spacing
    const int rows = static_cast<int>(std::ceil(height / dy)) + 2;
    const int cols = static_cast<int>(std::ceil(width / dx)) + 2;
    struct Center {
        double x, y;
    };
    std::vector<Center> centers;
    for (int r = -1; r < rows; ++r)
        for (int c = -1; c < cols; ++c) centers.push_back({(c + (r & 1 ? 0.5 : 0.0)) * dx, r * dy});
    LabelMap m(width, height);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const double px = x + 0.5;
            const double py = y + 0.5;
            // Candidate rows around py only.
            const int r0 = static_cast<int>(std::floor(py / dy));
            double best = std::numeric_limits<double>::infinity();
            Label arg = 0;
            for (int r = r0 - 1; r <= r0 + 2; ++r) {
                if (r < -1 || r >= rows) continue;
                const int c0 = static_cast<int>(std::floor(px / dx));
                for (int c = c0 - 1; c <= c0 + 2; ++c) {
                    if (c < -1 || c >= cols) continue;
                    const std::size_t id = static_cast<std::size_t>(r + 1) * (cols + 1) + (c + 1);
                    const double d = std::hypot(px - centers[id].x, py - centers[id].y);
                    if (d < best) {
                        best = d;
                        arg = static_cast<Label>(id);
                    }
                }
            }
            m.at(x, y) = arg;
        }
    }
    return compact_labels(m);
}

LabelMap noisy_square_tiling(int width, int height, int side, double flip_probability, int passes,
                             std::uint64_t seed) {
    LabelMap m = square_tiling(width, height, side);
    SplitMix64 rng(seed);
    static constexpr int ddx[] = {1, -1, 0, 0};
    static constexpr int ddy[] = {0, 0, 1, -1};
    for (int pass = 0; pass < passes; ++pass) {
        LabelMap next = m;
        for (int y = 0; y < height; ++y) {
            for (int x = 0; x < width; ++x) {
                const int dir = static_cast<int>(rng.next() % 4);
                const double u = rng.uniform();
                const int qx = x + ddx[dir];
                const int qy = y + ddy[dir];
                if (qx < 0 || qy < 0 || qx >= width || qy >= height) continue;
                if (m.at(qx, qy) != m.at(x, y) && u < flip_probability) next.at(x, y) = m.at(qx, qy);
            }
        }
        m = std::move(next);
    }
    return m;
}

namespace {

void quad_split(LabelMap& m, int x0, int y0, int side, int min_side, double p, SplitMix64& rng, Label& next) {
    if (side > min_side && rng.uniform() < p) {
        const int half = side / 2;
        quad_split(m, x0, y0, half, min_side, p, rng, next);
        quad_split(m, x0 + half, y0, half, min_side, p, rng, next);
        quad_split(m, x0, y0 + half, half, min_side, p, rng, next);
        quad_split(m, x0 + half, y0 + half, half, min_side, p, rng, next);
        return;
    }
    for (int y = y0; y < y0 + side; ++y)
        for (int x = x0; x < x0 + side; ++x) m.at(x, y) = next;
    ++next;
}

}  // namespace

LabelMap quadtree_tiling(int size, int min_side, double split_probability, std::uint64_t seed) {
    if (size < 1 || (size & (size - 1)) != 0) throw InvalidArgument("quadtree_tiling: size must be a power of two");
    LabelMap m(size, size);
    SplitMix64 rng(seed);
    Label next = 0;
    // The root always splits so the tiling has mixed sizes.
    const int half = size / 2;
    for (int qy = 0; qy < 2; ++qy)
        for (int qx = 0; qx < 2; ++qx) quad_split(m, qx * half, qy * half, half, min_side, split_probability, rng, next);
    return compact_labels(m);
}

Scene random_scene(const SceneParams& params) {
    SplitMix64 rng(params.seed);
    const int w = params.width;
    const int h = params.height;
    struct Site {
        double x, y;
    };
    std::vector<Site> sites(params.regions);
    for (Site& s : sites) s = {rng.uniform() * w, rng.uniform() * h};
    LabelMap regions(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < sites.size(); ++i) {
                const double d = std::hypot(x + 0.5 - sites[i].x, y + 0.5 - sites[i].y);
                if (d < best) {
                    best = d;
                    regions.at(x, y) = static_cast<Label>(i);
                }
            }
        }
    }
    Scene scene;
    scene.groundtruth = enforce_connectivity(regions, static_cast<std::size_t>(params.min_region));
    const auto labels = static_cast<std::size_t>(scene.groundtruth.label_bound());

    struct Look {
        double rgb[3];
        double freq, phase, angle;
    };
    std::vector<Look> looks(labels);
    for (Look& look : looks) {
        for (double& c : look.rgb) c = 127.5 + (rng.uniform() - 0.5) * 255.0 * params.contrast;
        look.freq = 0.3 + 0.9 * rng.uniform();
        look.phase = 2.0 * std::numbers::pi * rng.uniform();
        look.angle = std::numbers::pi * rng.uniform();
    }
    scene.image = Image(w, h, 3);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const Look& look = looks[scene.groundtruth.at(x, y)];
            const double t = x * std::cos(look.angle) + y * std::sin(look.angle);
            const double tex = params.texture * std::sin(look.freq * t + look.phase);
            for (int c = 0; c < 3; ++c) {
                double v = look.rgb[c] + tex;
                if (params.noise_sigma > 0) v += params.noise_sigma * rng.normal();
                scene.image.at(x, y, c) = std::clamp(v, 0.0, 255.0);
            }
        }
    }
    return scene;
}

}  // namespace superpix::synth
