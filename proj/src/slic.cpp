#include "superpix/slic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "superpix/color.hpp"
#include "superpix/raster.hpp"

namespace superpix {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double lab_gradient(const LabImage& lab, int x, int y) {
    const double l = lab.lightness(x, y);
    const double gx = x + 1 < lab.width() ? lab.lightness(x + 1, y) - l : 0.0;
    const double gy = y + 1 < lab.height() ? lab.lightness(x, y + 1) - l : 0.0;
    return gx * gx + gy * gy;
}

void set_seed_colour(Seed& s, const LabImage& lab, int x, int y) {
    const double* v = lab.pixel(static_cast<std::size_t>(y) * lab.width() + x);
    std::copy(v, v + 3, s.lab);
}

std::size_t default_min_size(std::size_t pixels, std::size_t k) {
    return std::max<std::size_t>(1, pixels / k / 4);
}

}  // namespace

void SlicParams::validate() const {
    if (k < 1) throw InvalidArgument("slic: k must be >= 1");
    if (!(m > 0.0)) throw InvalidArgument("slic: m must be > 0");
    if (iterations < 1) throw InvalidArgument("slic: iterations must be >= 1");
}

std::vector<Seed> init_seeds(const LabImage& img, std::size_t k) {
    const std::size_t n = img.pixel_count();
    if (k < 1 || k > n) throw InvalidArgument("init_seeds: k must lie in [1, pixel count]");
    const int w = img.width();
    const int h = img.height();
    const double kd = static_cast<double>(k);
    // The shorter side gets its strip count first so the longer side absorbs rounding.
    int nx = 1;
    int ny = 1;
    if (w >= h) {
        ny = std::max(1, static_cast<int>(std::lround(std::sqrt(kd * h / w))));
        nx = std::max(1, static_cast<int>(std::lround(kd / ny)));
    } else {
        nx = std::max(1, static_cast<int>(std::lround(std::sqrt(kd * w / h))));
        ny = std::max(1, static_cast<int>(std::lround(kd / nx)));
    }
    nx = std::min(nx, w);
    ny = std::min(ny, h);

    std::vector<Seed> seeds;
    seeds.reserve(static_cast<std::size_t>(nx) * ny);
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            Seed s;
            s.x = (i + 0.5) * w / nx - 0.5;
            s.y = (j + 0.5) * h / ny - 0.5;
            const int px = std::clamp(static_cast<int>(std::lround(s.x)), 0, w - 1);
            const int py = std::clamp(static_cast<int>(std::lround(s.y)), 0, h - 1);
            double best = lab_gradient(img, px, py);
            int bx = px;
            int by = py;
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    const int qx = px + dx;
                    const int qy = py + dy;
                    if (qx < 0 || qy < 0 || qx >= w || qy >= h) continue;
                    const double g = lab_gradient(img, qx, qy);
                    if (g < best) {
                        best = g;
                        bx = qx;
                        by = qy;
                    }
                }
            }
            if (bx != px || by != py) {
                s.x = bx;
                s.y = by;
            }
            set_seed_colour(s, img, bx, by);
            seeds.push_back(s);
        }
    }
    return seeds;
}

std::vector<Seed> init_mask_seeds(const LabImage& img, const BinaryMask& mask, std::size_t k) {
    require_same_shape(img, mask, "init_mask_seeds");
    const std::size_t area = mask.count();
    if (k < 1 || k > area) throw InvalidArgument("init_mask_seeds: mask has fewer pixels than requested seeds");
    const int w = mask.width();
    const DistanceField dt = distance_transform(mask);
    std::vector<double> score(mask.size(), -1.0);
    for (std::size_t p = 0; p < mask.size(); ++p)
        if (mask[p]) score[p] = dt[p];

    std::vector<Seed> seeds;
    seeds.reserve(k);
    while (seeds.size() < k) {
        std::size_t arg = 0;
        double best = -1.0;
        for (std::size_t p = 0; p < score.size(); ++p) {
            if (score[p] > best) {
                best = score[p];
                arg = p;
            }
        }
        const int sx = static_cast<int>(arg % w);
        const int sy = static_cast<int>(arg / w);
        Seed s;
        s.x = sx;
        s.y = sy;
        set_seed_colour(s, img, sx, sy);
        seeds.push_back(s);
        score[arg] = -0.5;  // never picked twice, still below any mask score
        for (std::size_t p = 0; p < score.size(); ++p) {
            if (score[p] <= 0.0) continue;
            const double dx = static_cast<double>(p % w) - sx;
            const double dy = static_cast<double>(p / w) - sy;
            score[p] = std::min(score[p], std::sqrt(dx * dx + dy * dy));
        }
    }
    return seeds;
}

namespace detail {

LabelMap cluster_pixels(const LabImage& lab, const BinaryMask* mask, std::vector<Seed> seeds, double step, double m,
                        int iterations) {
    const int w = lab.width();
    const int h = lab.height();
    const std::size_t n = lab.pixel_count();
    const double spatial_weight = (m / step) * (m / step);
    auto inside = [&](std::size_t p) { return mask == nullptr || (*mask)[p]; };
    auto distance2 = [&](const Seed& s, std::size_t p, int x, int y) {
        const double* c = lab.pixel(p);
        const double dl = c[0] - s.lab[0];
        const double da = c[1] - s.lab[1];
        const double db = c[2] - s.lab[2];
        const double dx = x - s.x;
        const double dy = y - s.y;
        return dl * dl + da * da + db * db + spatial_weight * (dx * dx + dy * dy);
    };

    LabelMap labels(w, h, kUnlabeled);
    std::vector<double> best(n);
    std::vector<double> sums(seeds.size() * 5);
    std::vector<std::size_t> counts(seeds.size());
    for (int iter = 0; iter < iterations; ++iter) {
        std::fill(best.begin(), best.end(), kInf);
        std::fill(labels.labels().begin(), labels.labels().end(), kUnlabeled);
        for (std::size_t i = 0; i < seeds.size(); ++i) {
            const Seed& s = seeds[i];
            const int x0 = std::max(0, static_cast<int>(std::ceil(s.x - step)));
            const int x1 = std::min(w - 1, static_cast<int>(std::floor(s.x + step)));
            const int y0 = std::max(0, static_cast<int>(std::ceil(s.y - step)));
            const int y1 = std::min(h - 1, static_cast<int>(std::floor(s.y + step)));
            for (int y = y0; y <= y1; ++y) {
                for (int x = x0; x <= x1; ++x) {
                    const std::size_t p = static_cast<std::size_t>(y) * w + x;
                    if (!inside(p)) continue;
                    const double d = distance2(s, p, x, y);
                    if (d < best[p]) {
                        best[p] = d;
                        labels[p] = static_cast<Label>(i);
                    }
                }
            }
        }
        std::fill(sums.begin(), sums.end(), 0.0);
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t p = 0; p < n; ++p) {
            const Label l = labels[p];
            if (l == kUnlabeled) continue;
            const double* c = lab.pixel(p);
            double* acc = &sums[static_cast<std::size_t>(l) * 5];
            acc[0] += c[0];
            acc[1] += c[1];
            acc[2] += c[2];
            acc[3] += static_cast<double>(p % w);
            acc[4] += static_cast<double>(p / w);
            ++counts[l];
        }
        for (std::size_t i = 0; i < seeds.size(); ++i) {
            if (counts[i] == 0) continue;
            const double inv = 1.0 / static_cast<double>(counts[i]);
            const double* acc = &sums[i * 5];
            seeds[i].lab[0] = acc[0] * inv;
            seeds[i].lab[1] = acc[1] * inv;
            seeds[i].lab[2] = acc[2] * inv;
            seeds[i].x = acc[3] * inv;
            seeds[i].y = acc[4] * inv;
        }
    }
    // Pixels no window reached go to the globally nearest seed.
    for (std::size_t p = 0; p < n; ++p) {
        if (labels[p] != kUnlabeled || !inside(p)) continue;
        const int x = static_cast<int>(p % w);
        const int y = static_cast<int>(p / w);
        double d_best = kInf;
        for (std::size_t i = 0; i < seeds.size(); ++i) {
            const double d = distance2(seeds[i], p, x, y);
            if (d < d_best) {
                d_best = d;
                labels[p] = static_cast<Label>(i);
            }
        }
    }
    return labels;
}

}  // namespace detail

LabelMap run_slic(const Image& img, const SlicParams& params) {
    params.validate();
    const std::size_t n = img.pixel_count();
    if (params.k > n) throw InvalidArgument("run_slic: k exceeds the pixel count");
    const LabImage lab = to_lab_features(params.prefilter ? bilateral_filter(img, params.bilateral) : img);
    std::vector<Seed> seeds = init_seeds(lab, params.k);
    const double step = std::sqrt(static_cast<double>(n) / static_cast<double>(params.k));
    const LabelMap raw = detail::cluster_pixels(lab, nullptr, std::move(seeds), step, params.m, params.iterations);
    return enforce_connectivity(raw, params.min_size.value_or(default_min_size(n, params.k)));
}

LabelMap run_mask_slic(const Image& img, const BinaryMask& mask, const SlicParams& params) {
    params.validate();
    require_same_shape(img, mask, "run_mask_slic");
    if (mask.count() < params.k) throw InvalidArgument("run_mask_slic: mask has fewer pixels than k");
    return run_mask_slic(to_lab_features(params.prefilter ? bilateral_filter(img, params.bilateral) : img), mask,
                         params);
}

LabelMap run_mask_slic(const LabImage& lab, const BinaryMask& mask, const SlicParams& params) {
    params.validate();
    require_same_shape(lab, mask, "run_mask_slic");
    const std::size_t area = mask.count();
    if (area < params.k) throw InvalidArgument("run_mask_slic: mask has fewer pixels than k");
    std::vector<Seed> seeds = init_mask_seeds(lab, mask, params.k);
    const double step = std::sqrt(static_cast<double>(area) / static_cast<double>(params.k));
    const LabelMap raw = detail::cluster_pixels(lab, &mask, std::move(seeds), step, params.m, params.iterations);
    return enforce_connectivity(raw, params.min_size.value_or(default_min_size(area, params.k)));
}

LabelMap merge_components(const LabelMap& map,
                          const std::function<bool(std::size_t group, std::size_t size)>& must_merge) {
    const Components comps = connected_components(map);
    const std::size_t count = comps.count();
    const int w = map.width();
    const int h = map.height();
    std::vector<std::size_t> parent(count);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t c) {
        while (parent[c] != c) {
            parent[c] = parent[parent[c]];
            c = parent[c];
        }
        return c;
    };
    std::vector<std::vector<std::size_t>> members(count);
    for (std::size_t p = 0; p < map.size(); ++p) members[comps.labels[p]].push_back(p);
    auto is_sentinel = [&](std::size_t c) { return comps.source[c] == kUnlabeled; };

    std::vector<std::size_t> shared(count, 0);
    std::vector<std::size_t> touched;
    for (std::size_t c = 0; c < count; ++c) {
        if (is_sentinel(c)) continue;
        std::size_t g = find(c);
        while (must_merge(g, members[g].size())) {
            touched.clear();
            for (std::size_t p : members[g]) {
                const int x = static_cast<int>(p % w);
                const int y = static_cast<int>(p / w);
                const std::pair<int, int> nbrs[] = {{x + 1, y}, {x - 1, y}, {x, y + 1}, {x, y - 1}};
                for (auto [qx, qy] : nbrs) {
                    if (qx < 0 || qy < 0 || qx >= w || qy >= h) continue;
                    const std::size_t qc = comps.labels[static_cast<std::size_t>(qy) * w + qx];
                    if (is_sentinel(qc)) continue;
                    const std::size_t qg = find(qc);
                    if (qg == g) continue;
                    if (shared[qg]++ == 0) touched.push_back(qg);
                }
            }
            if (touched.empty()) break;
            std::size_t target = touched.front();
            for (std::size_t t : touched) {
                if (shared[t] > shared[target] || (shared[t] == shared[target] && t < target)) target = t;
            }
            for (std::size_t t : touched) shared[t] = 0;
            parent[g] = target;
            auto& dst = members[target];
            auto& src = members[g];
            if (dst.size() < src.size()) dst.swap(src);
            dst.insert(dst.end(), src.begin(), src.end());
            src.clear();
            src.shrink_to_fit();
            g = target;
        }
    }
    LabelMap out(w, h, kUnlabeled);
    for (std::size_t p = 0; p < map.size(); ++p) {
        const std::size_t c = comps.labels[p];
        if (!is_sentinel(c)) out[p] = static_cast<Label>(find(c));
    }
    return compact_labels(out);
}

LabelMap enforce_connectivity(const LabelMap& map, std::size_t min_size) {
    return merge_components(map, [min_size](std::size_t, std::size_t size) { return size < min_size; });
}

}  // namespace superpix
