#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "superpix/image.hpp"

namespace superpix {

/// Joint histogram of a superpixel map and a groundtruth map: counts[k][j] = |S_k ∩ G_j|.
/// Rows are stored sparsely; superpixel and groundtruth indices follow first appearance.
class OverlapTable {
public:
    struct Entry {
        std::uint32_t gt;
        std::size_t count;
    };

    static OverlapTable build(const LabelMap& seg, const LabelMap& gt);

    std::size_t superpixel_count() const noexcept { return sp_sizes_.size(); }
    std::size_t groundtruth_count() const noexcept { return gt_sizes_.size(); }
    std::size_t pixel_count() const noexcept { return pixels_; }

    std::span<const std::size_t> superpixel_sizes() const noexcept { return sp_sizes_; }
    std::span<const std::size_t> groundtruth_sizes() const noexcept { return gt_sizes_; }
    /// Non-zero overlaps of superpixel k, ordered by groundtruth index.
    std::span<const Entry> row(std::size_t k) const {
        return {entries_.data() + row_start_[k], row_start_[k + 1] - row_start_[k]};
    }
    std::size_t count(std::size_t k, std::size_t j) const;

private:
    std::size_t pixels_ = 0;
    std::vector<std::size_t> sp_sizes_;
    std::vector<std::size_t> gt_sizes_;
    std::vector<std::size_t> row_start_;
    std::vector<Entry> entries_;
};

double asa(const OverlapTable& t);

enum class UeVariant { classic, tol5, corrected };
double undersegmentation_error(const OverlapTable& t, UeVariant variant);

/// Fraction of groundtruth boundary pixels with a superpixel boundary pixel at distance < epsilon.
/// Throws InvalidArgument when the groundtruth boundary is empty.
double boundary_recall(const BinaryMask& seg_boundary, const BinaryMask& gt_boundary, double epsilon = 2.0);
/// Fraction of superpixel boundary pixels within distance < epsilon of the groundtruth boundary.
/// Throws InvalidArgument when the superpixel boundary is empty.
double boundary_precision(const BinaryMask& seg_boundary, const BinaryMask& gt_boundary, double epsilon = 2.0);
double contour_density(const BinaryMask& seg_boundary);

/// Area-weighted isoperimetric quotient min(1, 4*pi*|S|/P^2), where P is the number of
/// contour pixels of S (pixels with a 4-neighbour outside S or on the image frame).
double compactness(const LabelMap& seg);

struct Regularity {
    double gr = 0.0;   // src * smf
    double src = 0.0;  // shape regularity: convexity * balanced distribution * smoothness
    double smf = 0.0;  // shape consistency across superpixels
};
Regularity global_regularity(const LabelMap& seg);

/// Per-channel explained variation averaged over channels with non-zero variance;
/// 1 for a constant image.
double explained_variation(const LabelMap& seg, const Image& img);
double intra_cluster_variation(const LabelMap& seg, const Image& img);

/// Mean squared difference between generated and requested superpixel counts.
double vsn(double k_requested, std::span<const double> k_generated);

struct MetricReport {
    std::string method;
    std::string image;
    std::size_t k_requested = 0;
    std::size_t k_generated = 0;
    std::optional<double> time_ms;
    // groundtruth-dependent
    std::optional<double> asa, ue, ue_tol5, cue, br, precision;
    // groundtruth-free
    double cd = 0.0, co = 0.0, src = 0.0, smf = 0.0, gr = 0.0;
    // image-dependent
    std::optional<double> ev, icv;
    std::optional<double> vsn;
};

struct ReportOptions {
    double epsilon = 2.0;
};

/// Evaluates every metric. Groundtruth-dependent scores are averaged over `gts`; BR and P are
/// averaged over the annotations for which they are defined and left empty otherwise.
MetricReport full_report(const LabelMap& seg, std::span<const LabelMap> gts, const Image* img,
                         std::size_t k_requested, std::optional<double> time_ms, const ReportOptions& opts = {});

/// Fixed CSV column order for a MetricReport row.
const std::vector<std::string>& report_columns();
/// Cell text per column; absent values are empty.
std::vector<std::string> report_cells(const MetricReport& r);
nlohmann::ordered_json to_json(const MetricReport& r);

}  // namespace superpix
