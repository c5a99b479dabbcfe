#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace superpix {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Dense row-major raster of real-valued samples in [0, 255].
class Image {
public:
    Image() = default;
    Image(int width, int height, int channels, double fill = 0.0);
    Image(int width, int height, int channels, std::vector<double> data);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    int channels() const noexcept { return channels_; }
    std::size_t pixel_count() const noexcept { return static_cast<std::size_t>(width_) * height_; }
    bool empty() const noexcept { return data_.empty(); }

    double& at(int x, int y, int c = 0) { return data_[index(x, y, c)]; }
    double at(int x, int y, int c = 0) const { return data_[index(x, y, c)]; }
    /// Samples of pixel `p` (row-major linear index).
    std::span<const double> pixel(std::size_t p) const {
        return {data_.data() + p * channels_, static_cast<std::size_t>(channels_)};
    }
    std::span<double> pixel(std::size_t p) {
        return {data_.data() + p * channels_, static_cast<std::size_t>(channels_)};
    }

    std::span<const double> data() const noexcept { return data_; }
    std::span<double> data() noexcept { return data_; }

    bool operator==(const Image&) const = default;

private:
    std::size_t index(int x, int y, int c) const noexcept {
        return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
    }

    int width_ = 0;
    int height_ = 0;
    int channels_ = 0;
    std::vector<double> data_;
};

/// Three-channel CIELAB raster (L, a, b per pixel).
class LabImage {
public:
    LabImage() = default;
    LabImage(int width, int height) : width_(width), height_(height), data_(3u * width * height) {}

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t pixel_count() const noexcept { return static_cast<std::size_t>(width_) * height_; }

    const double* pixel(std::size_t p) const { return data_.data() + 3 * p; }
    double* pixel(std::size_t p) { return data_.data() + 3 * p; }
    double lightness(int x, int y) const { return data_[3 * (static_cast<std::size_t>(y) * width_ + x)]; }

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<double> data_;
};

using Label = std::int32_t;
inline constexpr Label kUnlabeled = -1;

/// Dense raster of region identifiers; kUnlabeled marks "no region".
class LabelMap {
public:
    LabelMap() = default;
    LabelMap(int width, int height, Label fill = 0);
    LabelMap(int width, int height, std::vector<Label> labels);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t size() const noexcept { return labels_.size(); }

    Label& at(int x, int y) { return labels_[static_cast<std::size_t>(y) * width_ + x]; }
    Label at(int x, int y) const { return labels_[static_cast<std::size_t>(y) * width_ + x]; }
    Label& operator[](std::size_t p) { return labels_[p]; }
    Label operator[](std::size_t p) const { return labels_[p]; }

    std::span<const Label> labels() const noexcept { return labels_; }
    std::span<Label> labels() noexcept { return labels_; }

    bool has_unlabeled() const;
    /// Number of distinct non-sentinel labels.
    std::size_t count_labels() const;
    /// One past the largest non-sentinel label (0 when fully unlabeled).
    Label label_bound() const;

    bool operator==(const LabelMap&) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<Label> labels_;
};

class BinaryMask {
public:
    BinaryMask() = default;
    BinaryMask(int width, int height, bool fill = false)
        : width_(width), height_(height), bits_(static_cast<std::size_t>(width) * height, fill ? 1 : 0) {}

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t size() const noexcept { return bits_.size(); }

    bool at(int x, int y) const { return bits_[static_cast<std::size_t>(y) * width_ + x] != 0; }
    void set(int x, int y, bool v = true) { bits_[static_cast<std::size_t>(y) * width_ + x] = v ? 1 : 0; }
    bool operator[](std::size_t p) const { return bits_[p] != 0; }
    void set(std::size_t p, bool v = true) { bits_[p] = v ? 1 : 0; }

    std::size_t count() const;
    bool any() const { return count() > 0; }

    bool operator==(const BinaryMask&) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> bits_;
};

class DistanceField {
public:
    DistanceField() = default;
    DistanceField(int width, int height, std::vector<double> values)
        : width_(width), height_(height), values_(std::move(values)) {}

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    double at(int x, int y) const { return values_[static_cast<std::size_t>(y) * width_ + x]; }
    double operator[](std::size_t p) const { return values_[p]; }
    std::span<const double> values() const noexcept { return values_; }

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<double> values_;
};

template <typename A, typename B>
bool same_shape(const A& a, const B& b) {
    return a.width() == b.width() && a.height() == b.height();
}

template <typename A, typename B>
void require_same_shape(const A& a, const B& b, const char* what) {
    if (!same_shape(a, b)) {
        throw InvalidArgument(std::string(what) + ": shape mismatch (" + std::to_string(a.width()) + "x" +
                              std::to_string(a.height()) + " vs " + std::to_string(b.width()) + "x" +
                              std::to_string(b.height()) + ")");
    }
}

}  // namespace superpix
