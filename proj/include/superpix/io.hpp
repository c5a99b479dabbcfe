#pragma once

#include <filesystem>

#include "superpix/image.hpp"

namespace superpix {

enum class LabelFormat { png16, csv };

/// Reads an 8-bit grayscale or RGB raster (PNG, binary PGM/PPM).
/// Other bit depths, palettes and alpha channels are rejected.
Image load_image(const std::filesystem::path& path);
/// Writes 8-bit PNG; samples are rounded and clamped to [0, 255].
void save_image(const Image& img, const std::filesystem::path& path);

/// PNG label maps store 65535 for kUnlabeled, so labels must stay below 65535.
void save_label_map(const LabelMap& map, const std::filesystem::path& path, LabelFormat format);
/// Format chosen from the extension (.csv or .png).
void save_label_map(const LabelMap& map, const std::filesystem::path& path);
/// Accepts CSV, 16-bit or 8-bit grayscale PNG.
LabelMap load_label_map(const std::filesystem::path& path);

std::string label_map_to_csv(const LabelMap& map);
LabelMap label_map_from_csv(const std::string& text);

/// 8-bit single channel, 0 = false, 255 = true. Loading treats any non-zero value as true.
void save_mask(const BinaryMask& mask, const std::filesystem::path& path);
BinaryMask load_mask(const std::filesystem::path& path);

}  // namespace superpix
