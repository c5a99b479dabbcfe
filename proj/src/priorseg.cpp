#include "superpix/priorseg.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "superpix/color.hpp"
#include "superpix/io.hpp"
#include "superpix/raster.hpp"
#include "superpix/slic.hpp"

namespace superpix {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::string mask_name(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "mask_%03zu.png", i);
    return buf;
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

template <typename F>
auto in_stage(const char* stage, F&& body) {
    try {
        return body();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(stage, e.what());
    }
}

LabelMap segment_with_features(const LabImage& lab, const RegionPartition& part, std::span<const std::size_t> budgets,
                               const PipelineParams& params) {
    if (budgets.size() != part.count()) throw InvalidArgument("segment_regions: one budget per region required");
    require_same_shape(lab, part.regions, "segment_regions");
    LabelMap out(lab.width(), lab.height(), kUnlabeled);
    Label offset = 0;
    for (std::size_t r = 0; r < part.count(); ++r) {
        const BinaryMask mask = label_mask(part.regions, static_cast<Label>(r));
        const std::size_t area = mask.count();
        const std::size_t k = std::clamp<std::size_t>(budgets[r], 1, area);
        SlicParams sp;
        sp.k = k;
        sp.m = params.m;
        sp.iterations = params.iterations;
        const LabelMap local = run_mask_slic(lab, mask, sp);
        Label used = 0;
        for (std::size_t p = 0; p < local.size(); ++p) {
            if (local[p] == kUnlabeled) continue;
            out[p] = offset + local[p];
            used = std::max(used, static_cast<Label>(local[p] + 1));
        }
        offset += used;
    }
    return out;
}

}  // namespace

ObjectPrior load_object_prior(const fs::path& dir) {
    const fs::path manifest_path = dir / "manifest.json";
    std::ifstream in(manifest_path);
    if (!in) throw IoError("cannot open " + manifest_path.string());
    ObjectPrior prior;
    std::size_t count = 0;
    try {
        const auto j = nlohmann::json::parse(in);
        prior.width = j.at("width").get<int>();
        prior.height = j.at("height").get<int>();
        count = j.at("count").get<std::size_t>();
        prior.image = j.value("image", std::string{});
        prior.source = j.value("source", std::string{});
    } catch (const nlohmann::json::exception& e) {
        throw IoError(manifest_path.string() + ": malformed manifest: " + e.what());
    }
    if (prior.width <= 0 || prior.height <= 0)
        throw IoError(manifest_path.string() + ": malformed manifest: width and height must be positive");
    prior.masks.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const fs::path path = dir / mask_name(i);
        BinaryMask mask = load_mask(path);
        if (mask.width() != prior.width || mask.height() != prior.height)
            throw IoError(path.string() + ": mask shape does not match the manifest");
        prior.masks.push_back(std::move(mask));
    }
    return prior;
}

void save_object_prior(const ObjectPrior& prior, const fs::path& dir) {
    fs::create_directories(dir);
    for (const BinaryMask& m : prior.masks)
        if (m.width() != prior.width || m.height() != prior.height)
            throw InvalidArgument("save_object_prior: mask shape does not match the prior");
    ordered_json j;
    j["image"] = prior.image;
    j["width"] = prior.width;
    j["height"] = prior.height;
    j["count"] = prior.masks.size();
    j["source"] = prior.source;
    const fs::path manifest_path = dir / "manifest.json";
    std::ofstream out(manifest_path);
    if (!out) throw IoError("cannot write " + manifest_path.string());
    out << j.dump(2) << '\n';
    for (std::size_t i = 0; i < prior.masks.size(); ++i) save_mask(prior.masks[i], dir / mask_name(i));
}

ObjectPrior prior_from_labels(const LabelMap& labels, const std::string& source) {
    ObjectPrior prior;
    prior.source = source;
    prior.width = labels.width();
    prior.height = labels.height();
    for (Label l = 0; l < labels.label_bound(); ++l) {
        BinaryMask mask = label_mask(labels, l);
        if (mask.any()) prior.masks.push_back(std::move(mask));
    }
    return prior;
}

void PipelineParams::validate() const {
    if (k < 1) throw InvalidArgument("pipeline: k must be >= 1");
    if (!(m > 0.0)) throw InvalidArgument("pipeline: m must be > 0");
    if (iterations < 1) throw InvalidArgument("pipeline: iterations must be >= 1");
    if (min_area && *min_area < 1) throw InvalidArgument("pipeline: min_area must be >= 1");
    if (opening_radius < 1) throw InvalidArgument("pipeline: opening_radius must be >= 1");
}

std::size_t PipelineParams::resolved_min_area(std::size_t pixels) const {
    if (min_area) return *min_area;
    return std::max<std::size_t>(64, pixels / k / 2);
}

RegionPartition normalize_prior(const ObjectPrior& prior, const PipelineParams& params) {
    params.validate();
    if (prior.width <= 0 || prior.height <= 0) throw InvalidArgument("normalize_prior: prior has no shape");
    const int w = prior.width;
    const int h = prior.height;
    for (const BinaryMask& m : prior.masks)
        if (m.width() != w || m.height() != h) throw InvalidArgument("normalize_prior: mask shape mismatch");
    const std::size_t n = static_cast<std::size_t>(w) * h;
    const std::size_t min_area = params.resolved_min_area(n);

    struct Candidate {
        std::size_t index;
        std::size_t area;
    };
    std::vector<Candidate> order;
    for (std::size_t i = 0; i < prior.masks.size(); ++i) {
        const std::size_t area = prior.masks[i].count();
        if (area >= min_area) order.push_back({i, area});
    }
    std::stable_sort(order.begin(), order.end(), [](const Candidate& a, const Candidate& b) { return a.area < b.area; });

    RegionPartition part;
    part.regions = LabelMap(w, h, kUnlabeled);
    auto add_region = [&](const Components& comps, std::size_t c, Provenance prov) {
        const auto label = static_cast<Label>(part.count());
        for (std::size_t p = 0; p < n; ++p)
            if (comps.labels[p] == static_cast<Label>(c)) part.regions[p] = label;
        part.areas.push_back(comps.sizes[c]);
        part.provenance.push_back(prov);
    };

    for (const Candidate& cand : order) {
        const BinaryMask& source = prior.masks[cand.index];
        BinaryMask remaining(w, h);
        std::size_t area = 0;
        for (std::size_t p = 0; p < n; ++p) {
            if (source[p] && part.regions[p] == kUnlabeled) {
                remaining.set(p);
                ++area;
            }
        }
        if (area < min_area) continue;
        const Components comps = connected_components(remaining);
        for (std::size_t c = 0; c < comps.count(); ++c)
            if (comps.source[c] != kUnlabeled && comps.sizes[c] >= min_area) add_region(comps, c, Provenance::object);
    }

    BinaryMask rest(w, h);
    for (std::size_t p = 0; p < n; ++p) rest.set(p, part.regions[p] == kUnlabeled);
    if (rest.any()) {
        const Components comps = connected_components(morphological_open(rest, params.opening_radius));
        for (std::size_t c = 0; c < comps.count(); ++c)
            if (comps.source[c] != kUnlabeled && comps.sizes[c] >= min_area) add_region(comps, c, Provenance::background);
    }
    return part;
}

namespace {

// Largest-remainder counts before the [1, area] clamp.
std::vector<std::size_t> proportional_counts(const RegionPartition& part, std::size_t k) {
    const std::size_t regions = part.count();
    if (regions == 0) throw InvalidArgument("allocate_budgets: no regions");
    const double total = static_cast<double>(std::accumulate(part.areas.begin(), part.areas.end(), std::size_t{0}));
    std::vector<std::size_t> budgets(regions);
    std::vector<double> frac(regions);
    std::size_t assigned = 0;
    for (std::size_t r = 0; r < regions; ++r) {
        const double quota = static_cast<double>(k) * static_cast<double>(part.areas[r]) / total;
        budgets[r] = static_cast<std::size_t>(std::floor(quota));
        frac[r] = quota - std::floor(quota);
        assigned += budgets[r];
    }
    std::vector<std::size_t> order(regions);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (frac[a] != frac[b]) return frac[a] > frac[b];
        return part.areas[a] > part.areas[b];
    });
    for (std::size_t i = 0; assigned < k && i < regions; ++i, ++assigned) ++budgets[order[i]];
    return budgets;
}

}  // namespace

std::vector<std::size_t> allocate_budgets(const RegionPartition& part, std::size_t k) {
    std::vector<std::size_t> budgets = proportional_counts(part, k);
    for (std::size_t r = 0; r < budgets.size(); ++r) budgets[r] = std::clamp<std::size_t>(budgets[r], 1, part.areas[r]);
    return budgets;
}

LabelMap segment_regions(const Image& img, const RegionPartition& part, std::span<const std::size_t> budgets,
                         const PipelineParams& params) {
    params.validate();
    return segment_with_features(to_lab_features(params.prefilter ? bilateral_filter(img, params.bilateral) : img),
                                 part, budgets, params);
}

LabelMap nearest_superpixel_assignment(const LabelMap& seg, const Image& img, double m) {
    require_same_shape(seg, img, "assign_unlabeled");
    const int w = seg.width();
    const std::size_t n = seg.size();
    const auto bound = static_cast<std::size_t>(seg.label_bound());
    const LabImage lab = to_lab_features(img);

    std::vector<double> sums(bound * 5, 0.0);
    std::vector<std::size_t> counts(bound, 0);
    for (std::size_t p = 0; p < n; ++p) {
        if (seg[p] == kUnlabeled) continue;
        const double* c = lab.pixel(p);
        double* acc = &sums[static_cast<std::size_t>(seg[p]) * 5];
        acc[0] += c[0];
        acc[1] += c[1];
        acc[2] += c[2];
        acc[3] += static_cast<double>(p % w);
        acc[4] += static_cast<double>(p / w);
        ++counts[seg[p]];
    }
    struct Centre {
        Label label;
        double f[5];
    };
    std::vector<Centre> centres;
    for (std::size_t l = 0; l < bound; ++l) {
        if (counts[l] == 0) continue;
        Centre c{static_cast<Label>(l), {}};
        for (int i = 0; i < 5; ++i) c.f[i] = sums[l * 5 + i] / static_cast<double>(counts[l]);
        centres.push_back(c);
    }
    if (centres.empty()) throw InvalidArgument("assign_unlabeled: no labeled pixels");

    const double step = std::sqrt(static_cast<double>(n) / static_cast<double>(centres.size()));
    const double spatial_weight = (m / step) * (m / step);
    LabelMap out = seg;
    for (std::size_t p = 0; p < n; ++p) {
        if (seg[p] != kUnlabeled) continue;
        const double* c = lab.pixel(p);
        const double x = static_cast<double>(p % w);
        const double y = static_cast<double>(p / w);
        double best = std::numeric_limits<double>::infinity();
        for (const Centre& s : centres) {
            const double dl = c[0] - s.f[0], da = c[1] - s.f[1], db = c[2] - s.f[2];
            const double dx = x - s.f[3], dy = y - s.f[4];
            const double d = dl * dl + da * da + db * db + spatial_weight * (dx * dx + dy * dy);
            if (d < best) {
                best = d;
                out[p] = s.label;
            }
        }
    }
    return out;
}

LabelMap assign_unlabeled(const LabelMap& seg, const Image& img, double m) {
    if (!seg.has_unlabeled()) return seg;
    const LabelMap assigned = nearest_superpixel_assignment(seg, img, m);
    const Components comps = connected_components(assigned);
    std::vector<char> anchor(comps.count(), 0);
    for (std::size_t p = 0; p < seg.size(); ++p)
        if (seg[p] != kUnlabeled) anchor[comps.labels[p]] = 1;
    return merge_components(assigned, [&](std::size_t group, std::size_t) { return anchor[group] == 0; });
}

ordered_json to_json(const PipelineStats& s) {
    ordered_json j;
    j["regions"] = s.regions;
    j["object_regions"] = s.object_regions;
    j["background_regions"] = s.background_regions;
    j["unlabeled_pixels"] = s.unlabeled_pixels;
    j["clamped_budgets"] = s.clamped_budgets;
    j["k_requested"] = s.k_requested;
    j["k_generated"] = s.k_generated;
    j["normalize_ms"] = s.normalize_ms;
    j["segment_ms"] = s.segment_ms;
    j["assign_ms"] = s.assign_ms;
    j["total_ms"] = s.total_ms;
    return j;
}

PipelineResult run_pipeline(const Image& img, const ObjectPrior& prior, const PipelineParams& params) {
    const auto start = std::chrono::steady_clock::now();
    PipelineResult res;
    ObjectPrior shaped_empty;
    const ObjectPrior* used = &prior;

    auto t = std::chrono::steady_clock::now();
    res.partition = in_stage("normalize", [&] {
        params.validate();
        if (prior.masks.empty()) {
            shaped_empty.width = img.width();
            shaped_empty.height = img.height();
            used = &shaped_empty;
        } else if (prior.width != img.width() || prior.height != img.height()) {
            throw InvalidArgument("prior shape does not match the image");
        }
        return normalize_prior(*used, params);
    });
    res.stats.normalize_ms = elapsed_ms(t);
    res.stats.regions = res.partition.count();
    for (Provenance p : res.partition.provenance) ++(p == Provenance::object ? res.stats.object_regions
                                                                            : res.stats.background_regions);
    for (std::size_t p = 0; p < img.pixel_count(); ++p)
        res.stats.unlabeled_pixels += res.partition.regions[p] == kUnlabeled ? 1 : 0;

    t = std::chrono::steady_clock::now();
    Image features;
    res.segmented = in_stage("segment", [&] {
        if (res.partition.count() == 0) throw InvalidArgument("normalization left no region to segment");
        res.budgets = allocate_budgets(res.partition, params.k);
        features = params.prefilter ? bilateral_filter(img, params.bilateral) : img;
        return segment_with_features(to_lab_features(features), res.partition, res.budgets, params);
    });
    res.stats.segment_ms = elapsed_ms(t);
    {
        const std::vector<std::size_t> raw = proportional_counts(res.partition, params.k);
        for (std::size_t r = 0; r < raw.size(); ++r) res.stats.clamped_budgets += raw[r] > res.partition.areas[r] ? 1 : 0;
    }

    t = std::chrono::steady_clock::now();
    res.labels = in_stage("assign", [&] { return assign_unlabeled(res.segmented, features, params.m); });
    res.stats.assign_ms = elapsed_ms(t);

    res.stats.k_requested = params.k;
    res.stats.k_generated = res.labels.count_labels();
    res.stats.total_ms = elapsed_ms(start);
    return res;
}

}  // namespace superpix
