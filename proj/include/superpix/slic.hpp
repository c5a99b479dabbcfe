#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "superpix/filter.hpp"
#include "superpix/image.hpp"

namespace superpix {

struct SlicParams {
    std::size_t k = 100;  // requested superpixel count
    double m = 10.0;      // regularity (compactness) weight
    int iterations = 10;
    bool prefilter = false;
    BilateralParams bilateral{};
    /// Components smaller than this are merged; default is a quarter of the mean superpixel area.
    std::optional<std::size_t> min_size;

    void validate() const;
};

struct Seed {
    double x = 0.0;
    double y = 0.0;
    double lab[3] = {0.0, 0.0, 0.0};
};

/// Grid of roughly k cells shaped after the image aspect ratio; each seed is moved to the
/// lowest-gradient pixel of its 3x3 neighbourhood when that is strictly lower than its own.
std::vector<Seed> init_seeds(const LabImage& img, std::size_t k);

/// Farthest-point placement inside a mask: the first seed sits at the distance-transform
/// maximum, each next one maximises min(distance to the mask border, distance to placed seeds).
std::vector<Seed> init_mask_seeds(const LabImage& img, const BinaryMask& mask, std::size_t k);

/// Local k-means over Lab colour and position with D = sqrt(d_lab^2 + m^2 (d_xy / S)^2),
/// followed by enforce_connectivity. Every pixel is labeled.
LabelMap run_slic(const Image& img, const SlicParams& params);

/// SLIC restricted to the mask; pixels outside stay kUnlabeled.
LabelMap run_mask_slic(const Image& img, const BinaryMask& mask, const SlicParams& params);

/// Same as above on precomputed Lab features; `params.prefilter` is ignored.
LabelMap run_mask_slic(const LabImage& lab, const BinaryMask& mask, const SlicParams& params);

/// Makes every label 4-connected: components smaller than min_size are merged into the
/// neighbouring component sharing the longest crack boundary (ties: lowest component index),
/// larger detached pieces get their own label. Unlabeled pixels are left untouched and never
/// used as merge targets. Output labels are compacted.
LabelMap enforce_connectivity(const LabelMap& map, std::size_t min_size);

/// Generalised merge pass: 4-connected components are repeatedly merged into their best
/// neighbour while `must_merge(component_index, group_size)` holds for their group.
/// A group is identified by the index of its surviving component.
LabelMap merge_components(const LabelMap& map,
                          const std::function<bool(std::size_t group, std::size_t size)>& must_merge);

namespace detail {

/// Shared clustering core. `mask` may be null (whole image).
LabelMap cluster_pixels(const LabImage& lab, const BinaryMask* mask, std::vector<Seed> seeds, double step, double m,
                        int iterations);

}  // namespace detail

}  // namespace superpix
