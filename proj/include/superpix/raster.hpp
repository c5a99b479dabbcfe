#pragma once

#include <vector>

#include "superpix/image.hpp"

namespace superpix {

/// Marks p iff its right or bottom 4-neighbour exists and carries a different label.
/// Throws InvalidArgument if the map contains unlabeled pixels.
BinaryMask boundary_mask(const LabelMap& map);

enum class Connectivity { four = 4, eight = 8 };

struct Components {
    LabelMap labels;                 // component index per pixel, first-seen row-major order
    std::vector<std::size_t> sizes;  // pixel count per component
    std::vector<Label> source;       // input label of each component (kUnlabeled for sentinel runs)

    std::size_t count() const noexcept { return sizes.size(); }
};

/// Splits every input label (including the sentinel) into connected pieces.
Components connected_components(const LabelMap& map, Connectivity connectivity = Connectivity::four);
/// Connected components of the true pixels of a mask; false pixels are kUnlabeled in the output.
Components connected_components(const BinaryMask& mask, Connectivity connectivity = Connectivity::four);

/// Relabels to 0..K-1 in order of first row-major appearance; sentinel pixels stay unlabeled.
LabelMap compact_labels(const LabelMap& map);

/// Exact Euclidean distance from each true pixel to the nearest false pixel, where the
/// frame around the image counts as false. Zero on false pixels.
DistanceField distance_transform(const BinaryMask& mask);

/// Exact squared Euclidean distance from every pixel to the nearest target pixel
/// (no frame convention). +infinity everywhere when there is no target.
std::vector<double> squared_distance_to(const BinaryMask& targets);

/// Offsets (dx, dy) of the discrete disk {dx^2 + dy^2 <= radius^2}.
std::vector<std::pair<int, int>> disk_offsets(int radius);

/// Pixels outside the image do not constrain erosion.
BinaryMask erode(const BinaryMask& mask, int radius);
BinaryMask dilate(const BinaryMask& mask, int radius);
/// Erosion followed by dilation with a discrete disk.
BinaryMask morphological_open(const BinaryMask& mask, int radius);

/// Pixels carrying `label`.
BinaryMask label_mask(const LabelMap& map, Label label);

}  // namespace superpix
