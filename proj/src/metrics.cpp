#include "superpix/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "superpix/format.hpp"
#include "superpix/raster.hpp"

namespace superpix {

namespace {

void require_fully_labeled(const LabelMap& m, const char* what) {
    if (m.has_unlabeled()) throw InvalidArgument(std::string(what) + ": map contains unlabeled pixels");
}

// Dense 0..K-1 indices (first appearance) and the pixel lists of each label.
struct LabelPixels {
    LabelMap dense;
    std::vector<std::vector<std::size_t>> pixels;
};

LabelPixels group_pixels(const LabelMap& seg) {
    LabelPixels g{compact_labels(seg), {}};
    g.pixels.resize(static_cast<std::size_t>(g.dense.label_bound()));
    for (std::size_t p = 0; p < g.dense.size(); ++p) g.pixels[g.dense[p]].push_back(p);
    return g;
}

struct Point {
    std::int64_t x;
    std::int64_t y;
    bool operator<(const Point& o) const { return x != o.x ? x < o.x : y < o.y; }
    bool operator==(const Point& o) const = default;
};

std::int64_t cross(const Point& o, const Point& a, const Point& b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

// Andrew's monotone chain; counter-clockwise, no collinear vertices.
std::vector<Point> convex_hull(std::vector<Point> pts) {
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    if (pts.size() < 3) return pts;
    std::vector<Point> hull(2 * pts.size());
    std::size_t k = 0;
    for (const Point& p : pts) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
        hull[k++] = p;
    }
    for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
        while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    return hull;
}

struct HullGeometry {
    double lattice_points = 1.0;  // pixels inside or on the hull (Pick's theorem)
    double perimeter = 0.0;
};

HullGeometry hull_geometry(const std::vector<Point>& hull) {
    HullGeometry g;
    if (hull.size() == 1) return g;
    std::int64_t twice_area = 0;
    std::int64_t boundary = 0;
    double perimeter = 0.0;
    for (std::size_t i = 0; i < hull.size(); ++i) {
        const Point& a = hull[i];
        const Point& b = hull[(i + 1) % hull.size()];
        twice_area += a.x * b.y - b.x * a.y;
        const std::int64_t dx = std::abs(b.x - a.x);
        const std::int64_t dy = std::abs(b.y - a.y);
        boundary += std::gcd(dx, dy);
        perimeter += std::hypot(static_cast<double>(dx), static_cast<double>(dy));
    }
    g.lattice_points = std::abs(static_cast<double>(twice_area)) / 2.0 + static_cast<double>(boundary) / 2.0 + 1.0;
    g.perimeter = perimeter;
    return g;
}

// Pixels of the label set with a 4-neighbour of another label or on the image frame.
std::vector<std::size_t> contour_pixel_counts(const LabelMap& dense, std::size_t labels) {
    std::vector<std::size_t> counts(labels, 0);
    const int w = dense.width();
    const int h = dense.height();
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const Label l = dense.at(x, y);
            const bool contour = x == 0 || y == 0 || x == w - 1 || y == h - 1 || dense.at(x - 1, y) != l ||
                                 dense.at(x + 1, y) != l || dense.at(x, y - 1) != l || dense.at(x, y + 1) != l;
            if (contour) ++counts[l];
        }
    }
    return counts;
}

template <typename T>
std::optional<double> mean_of(const std::vector<T>& values) {
    if (values.empty()) return std::nullopt;
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

}  // namespace

OverlapTable OverlapTable::build(const LabelMap& seg, const LabelMap& gt) {
    require_same_shape(seg, gt, "overlap_table");
    require_fully_labeled(seg, "overlap_table");
    require_fully_labeled(gt, "overlap_table");
    const LabelMap s = compact_labels(seg);
    const LabelMap g = compact_labels(gt);
    OverlapTable t;
    t.pixels_ = s.size();
    t.sp_sizes_.assign(static_cast<std::size_t>(s.label_bound()), 0);
    t.gt_sizes_.assign(static_cast<std::size_t>(g.label_bound()), 0);
    const std::uint64_t j_count = t.gt_sizes_.size();
    std::vector<std::uint64_t> keys(s.size());
    for (std::size_t p = 0; p < s.size(); ++p) {
        ++t.sp_sizes_[s[p]];
        ++t.gt_sizes_[g[p]];
        keys[p] = static_cast<std::uint64_t>(s[p]) * j_count + static_cast<std::uint64_t>(g[p]);
    }
    std::sort(keys.begin(), keys.end());
    t.row_start_.assign(t.sp_sizes_.size() + 1, 0);
    for (std::size_t i = 0; i < keys.size();) {
        std::size_t run = i;
        while (run < keys.size() && keys[run] == keys[i]) ++run;
        const auto k = static_cast<std::size_t>(keys[i] / j_count);
        t.entries_.push_back({static_cast<std::uint32_t>(keys[i] % j_count), run - i});
        ++t.row_start_[k + 1];
        i = run;
    }
    std::partial_sum(t.row_start_.begin(), t.row_start_.end(), t.row_start_.begin());
    return t;
}

std::size_t OverlapTable::count(std::size_t k, std::size_t j) const {
    const auto r = row(k);
    auto it = std::lower_bound(r.begin(), r.end(), j, [](const Entry& e, std::size_t v) { return e.gt < v; });
    return it != r.end() && it->gt == j ? it->count : 0;
}

double asa(const OverlapTable& t) {
    std::size_t total = 0;
    for (std::size_t k = 0; k < t.superpixel_count(); ++k) {
        std::size_t best = 0;
        for (const auto& e : t.row(k)) best = std::max(best, e.count);
        total += best;
    }
    return static_cast<double>(total) / static_cast<double>(t.pixel_count());
}

double undersegmentation_error(const OverlapTable& t, UeVariant variant) {
    const auto n = static_cast<double>(t.pixel_count());
    const auto sp = t.superpixel_sizes();
    if (variant == UeVariant::corrected) {
        std::size_t leak = 0;
        for (std::size_t k = 0; k < t.superpixel_count(); ++k) {
            std::size_t best = 0;
            for (const auto& e : t.row(k)) best = std::max(best, e.count);
            leak += sp[k] - best;
        }
        return static_cast<double>(leak) / n;
    }
    // Sum over groundtruth regions of the sizes of the superpixels touching them.
    double covered = 0.0;
    for (std::size_t k = 0; k < t.superpixel_count(); ++k) {
        for (const auto& e : t.row(k)) {
            if (variant == UeVariant::tol5 && static_cast<double>(e.count) < 0.05 * static_cast<double>(sp[k])) {
                continue;
            }
            covered += static_cast<double>(sp[k]);
        }
    }
    const auto gt = t.groundtruth_sizes();
    const double gt_total = static_cast<double>(std::accumulate(gt.begin(), gt.end(), std::size_t{0}));
    return (covered - gt_total) / n;
}

namespace {

double fraction_detected(const BinaryMask& from, const BinaryMask& to, double epsilon) {
    const auto d2 = squared_distance_to(to);
    std::size_t total = 0;
    std::size_t hits = 0;
    for (std::size_t p = 0; p < from.size(); ++p) {
        if (!from[p]) continue;
        ++total;
        if (d2[p] < epsilon * epsilon) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(total);
}

}  // namespace

double boundary_recall(const BinaryMask& seg_boundary, const BinaryMask& gt_boundary, double epsilon) {
    require_same_shape(seg_boundary, gt_boundary, "boundary_recall");
    if (!gt_boundary.any()) throw InvalidArgument("boundary_recall: groundtruth boundary is empty");
    return fraction_detected(gt_boundary, seg_boundary, epsilon);
}

double boundary_precision(const BinaryMask& seg_boundary, const BinaryMask& gt_boundary, double epsilon) {
    require_same_shape(seg_boundary, gt_boundary, "boundary_precision");
    if (!seg_boundary.any()) throw InvalidArgument("boundary_precision: superpixel boundary is empty");
    return fraction_detected(seg_boundary, gt_boundary, epsilon);
}

double contour_density(const BinaryMask& seg_boundary) {
    return static_cast<double>(seg_boundary.count()) / static_cast<double>(seg_boundary.size());
}

double compactness(const LabelMap& seg) {
    require_fully_labeled(seg, "compactness");
    const LabelMap dense = compact_labels(seg);
    const auto labels = static_cast<std::size_t>(dense.label_bound());
    std::vector<std::size_t> area(labels, 0);
    for (std::size_t p = 0; p < dense.size(); ++p) ++area[dense[p]];
    const auto perimeter = contour_pixel_counts(dense, labels);
    const auto n = static_cast<double>(dense.size());
    double co = 0.0;
    for (std::size_t k = 0; k < labels; ++k) {
        const double a = static_cast<double>(area[k]);
        const double p = static_cast<double>(perimeter[k]);
        co += (a / n) * std::min(1.0, 4.0 * std::numbers::pi * a / (p * p));
    }
    return co;
}

Regularity global_regularity(const LabelMap& seg) {
    require_fully_labeled(seg, "global_regularity");
    const LabelPixels groups = group_pixels(seg);
    const std::size_t labels = groups.pixels.size();
    const int w = seg.width();
    const int h = seg.height();
    const auto n = static_cast<double>(seg.size());
    const auto perimeter = contour_pixel_counts(groups.dense, labels);

    // Shape registration grid: any offset from a barycenter to a pixel fits.
    const int grid_w = 2 * w - 1;
    const int grid_h = 2 * h - 1;
    std::vector<double> mean_shape(static_cast<std::size_t>(grid_w) * grid_h, 0.0);
    std::vector<std::pair<int, int>> anchor(labels);

    double src = 0.0;
    for (std::size_t k = 0; k < labels; ++k) {
        const auto& px = groups.pixels[k];
        const auto area = static_cast<double>(px.size());
        double sx = 0, sy = 0, sxx = 0, syy = 0;
        std::vector<Point> pts;
        pts.reserve(px.size());
        for (std::size_t p : px) {
            const double x = static_cast<double>(p % w);
            const double y = static_cast<double>(p / w);
            sx += x;
            sy += y;
            sxx += x * x;
            syy += y * y;
            pts.push_back({static_cast<std::int64_t>(p % w), static_cast<std::int64_t>(p / w)});
        }
        const double mx = sx / area;
        const double my = sy / area;
        const double sigma_x = std::sqrt(std::max(0.0, sxx / area - mx * mx));
        const double sigma_y = std::sqrt(std::max(0.0, syy / area - my * my));
        const double balance =
            std::max(sigma_x, sigma_y) > 0.0 ? std::min(sigma_x, sigma_y) / std::max(sigma_x, sigma_y) : 1.0;

        const HullGeometry hull = hull_geometry(convex_hull(std::move(pts)));
        const double convexity = std::min(1.0, area / hull.lattice_points);
        const double smoothness =
            px.size() == 1 ? 1.0 : std::min(1.0, hull.perimeter / static_cast<double>(perimeter[k]));
        src += area * convexity * balance * smoothness;

        const int bx = static_cast<int>(std::lround(mx));
        const int by = static_cast<int>(std::lround(my));
        anchor[k] = {bx, by};
        for (std::size_t p : px) {
            const int gx = static_cast<int>(p % w) - bx + (w - 1);
            const int gy = static_cast<int>(p / w) - by + (h - 1);
            mean_shape[static_cast<std::size_t>(gy) * grid_w + gx] += 1.0;
        }
    }
    src /= n;
    for (double& v : mean_shape) v /= n;

    // Each registered shape and the mean shape are unit-mass distributions; their
    // half L1 distance lies in [0, 1]. Only the support of the shape is visited.
    double mismatch = 0.0;
    for (std::size_t k = 0; k < labels; ++k) {
        const auto& px = groups.pixels[k];
        const double mass = 1.0 / static_cast<double>(px.size());
        double l1 = 0.0;
        double covered = 0.0;
        for (std::size_t p : px) {
            const int gx = static_cast<int>(p % w) - anchor[k].first + (w - 1);
            const int gy = static_cast<int>(p / w) - anchor[k].second + (h - 1);
            const double m = mean_shape[static_cast<std::size_t>(gy) * grid_w + gx];
            l1 += std::abs(mass - m);
            covered += m;
        }
        l1 += std::max(0.0, 1.0 - covered);
        mismatch += (static_cast<double>(px.size()) / n) * (l1 / 2.0);
    }
    Regularity r;
    r.src = std::clamp(src, 0.0, 1.0);
    r.smf = std::clamp(1.0 - mismatch, 0.0, 1.0);
    r.gr = r.src * r.smf;
    return r;
}

double explained_variation(const LabelMap& seg, const Image& img) {
    require_same_shape(seg, img, "explained_variation");
    require_fully_labeled(seg, "explained_variation");
    const LabelMap dense = compact_labels(seg);
    const auto labels = static_cast<std::size_t>(dense.label_bound());
    const int nc = img.channels();
    std::vector<double> sums(labels * nc, 0.0);
    std::vector<std::size_t> sizes(labels, 0);
    std::vector<double> global(nc, 0.0);
    for (std::size_t p = 0; p < dense.size(); ++p) {
        const auto px = img.pixel(p);
        ++sizes[dense[p]];
        for (int c = 0; c < nc; ++c) {
            sums[dense[p] * nc + c] += px[c];
            global[c] += px[c];
        }
    }
    const auto n = static_cast<double>(dense.size());
    double total = 0.0;
    int used = 0;
    for (int c = 0; c < nc; ++c) {
        const double mu = global[c] / n;
        double denom = 0.0;
        for (std::size_t p = 0; p < dense.size(); ++p) {
            const double d = img.pixel(p)[c] - mu;
            denom += d * d;
        }
        if (denom <= 0.0) continue;
        double numer = 0.0;
        for (std::size_t k = 0; k < labels; ++k) {
            const double d = sums[k * nc + c] / static_cast<double>(sizes[k]) - mu;
            numer += static_cast<double>(sizes[k]) * d * d;
        }
        total += std::clamp(numer / denom, 0.0, 1.0);
        ++used;
    }
    return used == 0 ? 1.0 : total / used;
}

double intra_cluster_variation(const LabelMap& seg, const Image& img) {
    require_same_shape(seg, img, "intra_cluster_variation");
    require_fully_labeled(seg, "intra_cluster_variation");
    const LabelPixels groups = group_pixels(seg);
    const int nc = img.channels();
    double total = 0.0;
    std::vector<double> mu(nc);
    for (const auto& px : groups.pixels) {
        std::fill(mu.begin(), mu.end(), 0.0);
        for (std::size_t p : px)
            for (int c = 0; c < nc; ++c) mu[c] += img.pixel(p)[c];
        for (double& m : mu) m /= static_cast<double>(px.size());
        double dev = 0.0;
        for (std::size_t p : px)
            for (int c = 0; c < nc; ++c) dev += (img.pixel(p)[c] - mu[c]) * (img.pixel(p)[c] - mu[c]);
        total += std::sqrt(dev / static_cast<double>(px.size()));
    }
    return total / static_cast<double>(groups.pixels.size());
}

double vsn(double k_requested, std::span<const double> k_generated) {
    if (k_generated.empty()) throw InvalidArgument("vsn: no generated counts");
    double sum = 0.0;
    for (double k : k_generated) sum += (k - k_requested) * (k - k_requested);
    return sum / static_cast<double>(k_generated.size());
}

MetricReport full_report(const LabelMap& seg, std::span<const LabelMap> gts, const Image* img,
                         std::size_t k_requested, std::optional<double> time_ms, const ReportOptions& opts) {
    require_fully_labeled(seg, "full_report");
    for (const LabelMap& gt : gts) require_same_shape(seg, gt, "full_report groundtruth");
    if (img) require_same_shape(seg, *img, "full_report image");

    MetricReport r;
    r.k_requested = k_requested;
    r.k_generated = seg.count_labels();
    r.time_ms = time_ms;
    const BinaryMask seg_b = boundary_mask(seg);
    r.cd = contour_density(seg_b);
    r.co = compactness(seg);
    const Regularity reg = global_regularity(seg);
    r.src = reg.src;
    r.smf = reg.smf;
    r.gr = reg.gr;
    if (k_requested > 0) {
        const double generated[] = {static_cast<double>(r.k_generated)};
        r.vsn = vsn(static_cast<double>(k_requested), generated);
    }

    if (!gts.empty()) {
        std::vector<double> asas, ues, tol5s, cues, brs, ps;
        for (const LabelMap& gt : gts) {
            const OverlapTable t = OverlapTable::build(seg, gt);
            asas.push_back(asa(t));
            ues.push_back(undersegmentation_error(t, UeVariant::classic));
            tol5s.push_back(undersegmentation_error(t, UeVariant::tol5));
            cues.push_back(undersegmentation_error(t, UeVariant::corrected));
            const BinaryMask gt_b = boundary_mask(gt);
            if (gt_b.any()) brs.push_back(boundary_recall(seg_b, gt_b, opts.epsilon));
            if (seg_b.any()) ps.push_back(boundary_precision(seg_b, gt_b, opts.epsilon));
        }
        r.asa = mean_of(asas);
        r.ue = mean_of(ues);
        r.ue_tol5 = mean_of(tol5s);
        r.cue = mean_of(cues);
        r.br = mean_of(brs);
        r.precision = mean_of(ps);
    }
    if (img) {
        r.ev = explained_variation(seg, *img);
        r.icv = intra_cluster_variation(seg, *img);
    }
    return r;
}

const std::vector<std::string>& report_columns() {
    static const std::vector<std::string> columns = {
        "method", "image", "k_requested", "k_generated", "time_ms", "asa", "ue",  "ue_tol5", "cue",
        "br",     "precision", "cd",      "co",          "src",     "smf", "gr",  "ev",      "icv"};
    return columns;
}

std::vector<std::string> report_cells(const MetricReport& r) {
    auto opt = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string(); };
    return {r.method,
            r.image,
            std::to_string(r.k_requested),
            std::to_string(r.k_generated),
            opt(r.time_ms),
            opt(r.asa),
            opt(r.ue),
            opt(r.ue_tol5),
            opt(r.cue),
            opt(r.br),
            opt(r.precision),
            format_number(r.cd),
            format_number(r.co),
            format_number(r.src),
            format_number(r.smf),
            format_number(r.gr),
            opt(r.ev),
            opt(r.icv)};
}

nlohmann::ordered_json to_json(const MetricReport& r) {
    nlohmann::ordered_json j;
    j["method"] = r.method;
    j["image"] = r.image;
    j["k_requested"] = r.k_requested;
    j["k_generated"] = r.k_generated;
    auto put = [&](const char* key, const std::optional<double>& v) {
        if (v) j[key] = *v;
    };
    put("time_ms", r.time_ms);
    put("asa", r.asa);
    put("ue", r.ue);
    put("ue_tol5", r.ue_tol5);
    put("cue", r.cue);
    put("br", r.br);
    put("precision", r.precision);
    j["cd"] = r.cd;
    j["co"] = r.co;
    j["src"] = r.src;
    j["smf"] = r.smf;
    j["gr"] = r.gr;
    put("ev", r.ev);
    put("icv", r.icv);
    put("vsn", r.vsn);
    return j;
}

}  // namespace superpix
