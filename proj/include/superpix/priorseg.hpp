#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "superpix/filter.hpp"
#include "superpix/image.hpp"

namespace superpix {

/// Possibly overlapping object masks for one image.
struct ObjectPrior {
    std::string image;
    std::string source = "synthetic";
    int width = 0;
    int height = 0;
    std::vector<BinaryMask> masks;
};

/// Reads `manifest.json` and `mask_000.png ... mask_<count-1>.png` from `dir`.
/// Throws IoError naming the offending file on a malformed manifest, missing mask or shape mismatch.
ObjectPrior load_object_prior(const std::filesystem::path& dir);

void save_object_prior(const ObjectPrior& prior, const std::filesystem::path& dir);

/// One object mask per label of a label map.
ObjectPrior prior_from_labels(const LabelMap& labels, const std::string& source = "synthetic");

struct PipelineParams {
    std::size_t k = 100;
    double m = 10.0;
    int iterations = 10;
    /// Minimum region area in pixels; default max(64, |I| / k / 2).
    std::optional<std::size_t> min_area;
    int opening_radius = 3;
    bool prefilter = true;
    BilateralParams bilateral{};

    void validate() const;
    std::size_t resolved_min_area(std::size_t pixels) const;
};

enum class Provenance { object, background };

struct RegionPartition {
    LabelMap regions;  // kUnlabeled on the thin remainder
    std::vector<std::size_t> areas;
    std::vector<Provenance> provenance;

    std::size_t count() const noexcept { return areas.size(); }
};

/// Greedy overlap removal in increasing area, then background extraction by opening the remainder.
RegionPartition normalize_prior(const ObjectPrior& prior, const PipelineParams& params);

/// Largest-remainder allocation of k over region areas, then at least one per region, at most its area.
std::vector<std::size_t> allocate_budgets(const RegionPartition& part, std::size_t k);

/// maskSLIC inside every region on a shared feature image; labels never span two regions.
LabelMap segment_regions(const Image& img, const RegionPartition& part, std::span<const std::size_t> budgets,
                         const PipelineParams& params);

/// Nearest superpixel for every unlabeled pixel by mean colour and centroid, then any piece not
/// attached to its superpixel is merged into a neighbour.
LabelMap assign_unlabeled(const LabelMap& seg, const Image& img, double m);

/// Index of the superpixel minimising d_lab^2 + m^2 (d_xy / S)^2 for each pixel of `seg`
/// that is unlabeled, before any merging. Exposed for testing.
LabelMap nearest_superpixel_assignment(const LabelMap& seg, const Image& img, double m);

struct PipelineStats {
    std::size_t regions = 0;
    std::size_t object_regions = 0;
    std::size_t background_regions = 0;
    std::size_t unlabeled_pixels = 0;  // sentinel pixels left by normalisation
    std::size_t clamped_budgets = 0;   // regions whose budget was cut to their area
    std::size_t k_requested = 0;
    std::size_t k_generated = 0;
    double normalize_ms = 0.0;
    double segment_ms = 0.0;
    double assign_ms = 0.0;
    double total_ms = 0.0;
};

nlohmann::ordered_json to_json(const PipelineStats& stats);

struct PipelineResult {
    LabelMap labels;
    LabelMap segmented;  // output of segment_regions, sentinel where assignment was needed
    RegionPartition partition;
    std::vector<std::size_t> budgets;
    PipelineStats stats;
};

/// Error raised inside a pipeline stage; `stage()` is one of normalize, segment, assign.
class StageError : public Error {
public:
    StageError(std::string stage, const std::string& what) : Error(stage + ": " + what), stage_(std::move(stage)) {}
    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

PipelineResult run_pipeline(const Image& img, const ObjectPrior& prior, const PipelineParams& params);

}  // namespace superpix
