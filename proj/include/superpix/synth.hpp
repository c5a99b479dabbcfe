#pragma once

#include <cstdint>
#include <vector>

#include "superpix/image.hpp"

namespace superpix::synth {

/// Square cells of the given side, row-major labels; cells are cut at the frame.
LabelMap square_tiling(int width, int height, int side);

/// Hexagons (pointy-top Voronoi cells of a hexagonal lattice) with the given
/// center-to-vertex radius; cells are cut at the frame.
LabelMap hex_tiling(int width, int height, double radius);

/// Square tiling whose boundary pixels are repeatedly swapped with neighbouring labels.
LabelMap noisy_square_tiling(int width, int height, int side, double flip_probability, int passes,
                             std::uint64_t seed);

/// Recursive quadrant split: cells keep splitting while they are larger than `min_side`
/// and a seeded coin says so, producing squares of mixed sizes.
LabelMap quadtree_tiling(int size, int min_side, double split_probability, std::uint64_t seed);

struct Scene {
    Image image;
    LabelMap groundtruth;  // 4-connected regions, each at least `min_region` pixels
};

struct SceneParams {
    int width = 96;
    int height = 96;
    int regions = 6;
    int min_region = 96;
    double contrast = 1.0;   // scales the spread of region colours around mid-grey
    double texture = 0.0;    // amplitude of a per-region sinusoidal texture
    double noise_sigma = 0;  // i.i.d. Gaussian jitter added to every sample
    std::uint64_t seed = 1;
};

/// Piecewise-constant (optionally textured) RGB image over a random Voronoi partition.
Scene random_scene(const SceneParams& params);

}  // namespace superpix::synth
