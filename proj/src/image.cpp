#include "superpix/image.hpp"

#include <algorithm>
#include <numeric>

namespace superpix {

namespace {

void check_dims(int width, int height) {
    if (width < 1 || height < 1) {
        throw InvalidArgument("raster dimensions must be >= 1, got " + std::to_string(width) + "x" +
                              std::to_string(height));
    }
}

}  // namespace

Image::Image(int width, int height, int channels, double fill)
    : width_(width), height_(height), channels_(channels) {
    check_dims(width, height);
    if (channels != 1 && channels != 3) throw InvalidArgument("image channels must be 1 or 3");
    data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

Image::Image(int width, int height, int channels, std::vector<double> data)
    : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
    check_dims(width, height);
    if (channels != 1 && channels != 3) throw InvalidArgument("image channels must be 1 or 3");
    if (data_.size() != static_cast<std::size_t>(width) * height * channels) {
        throw InvalidArgument("image data length does not match width*height*channels");
    }
}

LabelMap::LabelMap(int width, int height, Label fill) : width_(width), height_(height) {
    check_dims(width, height);
    labels_.assign(static_cast<std::size_t>(width) * height, fill);
}

LabelMap::LabelMap(int width, int height, std::vector<Label> labels)
    : width_(width), height_(height), labels_(std::move(labels)) {
    check_dims(width, height);
    if (labels_.size() != static_cast<std::size_t>(width) * height) {
        throw InvalidArgument("label data length does not match width*height");
    }
    if (std::any_of(labels_.begin(), labels_.end(), [](Label l) { return l < 0 && l != kUnlabeled; })) {
        throw InvalidArgument("labels must be non-negative or the unlabeled sentinel");
    }
}

bool LabelMap::has_unlabeled() const {
    return std::find(labels_.begin(), labels_.end(), kUnlabeled) != labels_.end();
}

Label LabelMap::label_bound() const {
    Label hi = -1;
    for (Label l : labels_) hi = std::max(hi, l);
    return hi + 1;
}

std::size_t LabelMap::count_labels() const {
    const auto bound = static_cast<std::size_t>(label_bound());
    if (bound > 4 * labels_.size() + 1024) {
        std::vector<Label> sorted(labels_);
        std::sort(sorted.begin(), sorted.end());
        sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
        return sorted.size() - (sorted.front() == kUnlabeled ? 1 : 0);
    }
    std::vector<bool> seen(bound, false);
    std::size_t n = 0;
    for (Label l : labels_) {
        if (l == kUnlabeled || seen[l]) continue;
        seen[l] = true;
        ++n;
    }
    return n;
}

std::size_t BinaryMask::count() const {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

}  // namespace superpix
