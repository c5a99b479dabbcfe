#include "superpix/raster.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace superpix {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Felzenszwalb & Huttenlocher lower envelope of parabolas over one line.
void squared_edt_1d(const double* f, double* d, int n, std::vector<int>& v, std::vector<double>& z) {
    v.resize(n);
    z.resize(n + 1);
    int k = -1;
    for (int q = 0; q < n; ++q) {
        if (f[q] == kInf) continue;
        if (k < 0) {
            k = 0;
            v[0] = q;
            z[0] = -kInf;
            z[1] = kInf;
            continue;
        }
        auto intersect = [&](int p) {
            return ((f[q] + static_cast<double>(q) * q) - (f[p] + static_cast<double>(p) * p)) / (2.0 * (q - p));
        };
        double s = intersect(v[k]);
        // z[0] is -inf, so the loop stops at k == 0.
        while (s <= z[k]) {
            --k;
            s = intersect(v[k]);
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = kInf;
    }
    if (k < 0) {
        std::fill(d, d + n, kInf);
        return;
    }
    int j = 0;
    for (int q = 0; q < n; ++q) {
        while (z[j + 1] < q) ++j;
        const double diff = q - v[j];
        d[q] = diff * diff + f[v[j]];
    }
}

// In-place separable squared EDT over a width x height grid of seeds (0) and non-seeds (inf).
void squared_edt_2d(std::vector<double>& grid, int width, int height) {
    std::vector<int> v;
    std::vector<double> z;
    std::vector<double> line(std::max(width, height));
    std::vector<double> out(std::max(width, height));
    for (int x = 0; x < width; ++x) {
        for (int y = 0; y < height; ++y) line[y] = grid[static_cast<std::size_t>(y) * width + x];
        squared_edt_1d(line.data(), out.data(), height, v, z);
        for (int y = 0; y < height; ++y) grid[static_cast<std::size_t>(y) * width + x] = out[y];
    }
    for (int y = 0; y < height; ++y) {
        double* row = grid.data() + static_cast<std::size_t>(y) * width;
        squared_edt_1d(row, out.data(), width, v, z);
        std::copy(out.begin(), out.begin() + width, row);
    }
}

template <typename SameRegion>
Components label_components(int width, int height, Connectivity connectivity, SameRegion same,
                            const std::vector<Label>& source_of_pixel, bool skip_sentinel) {
    Components result;
    result.labels = LabelMap(width, height, kUnlabeled);
    const std::size_t n = static_cast<std::size_t>(width) * height;
    std::vector<std::size_t> stack;
    static constexpr int dx4[] = {1, -1, 0, 0};
    static constexpr int dy4[] = {0, 0, 1, -1};
    static constexpr int dx8[] = {1, -1, 0, 0, 1, 1, -1, -1};
    static constexpr int dy8[] = {0, 0, 1, -1, 1, -1, 1, -1};
    const int nn = connectivity == Connectivity::four ? 4 : 8;
    const int* ddx = connectivity == Connectivity::four ? dx4 : dx8;
    const int* ddy = connectivity == Connectivity::four ? dy4 : dy8;
    for (std::size_t start = 0; start < n; ++start) {
        if (result.labels[start] != kUnlabeled) continue;
        if (skip_sentinel && source_of_pixel[start] == kUnlabeled) continue;
        const Label id = static_cast<Label>(result.sizes.size());
        std::size_t size = 0;
        result.labels[start] = id;
        stack.push_back(start);
        while (!stack.empty()) {
            const std::size_t p = stack.back();
            stack.pop_back();
            ++size;
            const int x = static_cast<int>(p % width);
            const int y = static_cast<int>(p / width);
            for (int i = 0; i < nn; ++i) {
                const int qx = x + ddx[i];
                const int qy = y + ddy[i];
                if (qx < 0 || qy < 0 || qx >= width || qy >= height) continue;
                const std::size_t q = static_cast<std::size_t>(qy) * width + qx;
                if (result.labels[q] != kUnlabeled || !same(p, q)) continue;
                result.labels[q] = id;
                stack.push_back(q);
            }
        }
        result.sizes.push_back(size);
        result.source.push_back(source_of_pixel[start]);
    }
    return result;
}

}  // namespace

BinaryMask boundary_mask(const LabelMap& map) {
    if (map.has_unlabeled()) throw InvalidArgument("boundary_mask: map contains unlabeled pixels");
    const int w = map.width();
    const int h = map.height();
    BinaryMask mask(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const Label l = map.at(x, y);
            if ((x + 1 < w && map.at(x + 1, y) != l) || (y + 1 < h && map.at(x, y + 1) != l)) mask.set(x, y);
        }
    }
    return mask;
}

Components connected_components(const LabelMap& map, Connectivity connectivity) {
    std::vector<Label> source(map.labels().begin(), map.labels().end());
    return label_components(
        map.width(), map.height(), connectivity, [&](std::size_t p, std::size_t q) { return map[p] == map[q]; },
        source, false);
}

Components connected_components(const BinaryMask& mask, Connectivity connectivity) {
    std::vector<Label> source(mask.size());
    for (std::size_t p = 0; p < mask.size(); ++p) source[p] = mask[p] ? 1 : kUnlabeled;
    return label_components(
        mask.width(), mask.height(), connectivity, [&](std::size_t p, std::size_t q) { return mask[p] == mask[q]; },
        source, true);
}

LabelMap compact_labels(const LabelMap& map) {
    LabelMap out(map.width(), map.height(), kUnlabeled);
    std::vector<Label> remap(static_cast<std::size_t>(map.label_bound()), kUnlabeled);
    Label next = 0;
    for (std::size_t p = 0; p < map.size(); ++p) {
        const Label l = map[p];
        if (l == kUnlabeled) continue;
        if (remap[l] == kUnlabeled) remap[l] = next++;
        out[p] = remap[l];
    }
    return out;
}

DistanceField distance_transform(const BinaryMask& mask) {
    // Pad by one false pixel on every side so the frame acts as background.
    const int w = mask.width() + 2;
    const int h = mask.height() + 2;
    std::vector<double> grid(static_cast<std::size_t>(w) * h, 0.0);
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            grid[static_cast<std::size_t>(y + 1) * w + (x + 1)] = mask.at(x, y) ? kInf : 0.0;
        }
    }
    squared_edt_2d(grid, w, h);
    std::vector<double> values(mask.size());
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            values[static_cast<std::size_t>(y) * mask.width() + x] =
                std::sqrt(grid[static_cast<std::size_t>(y + 1) * w + (x + 1)]);
        }
    }
    return DistanceField(mask.width(), mask.height(), std::move(values));
}

std::vector<double> squared_distance_to(const BinaryMask& targets) {
    std::vector<double> grid(targets.size());
    for (std::size_t p = 0; p < targets.size(); ++p) grid[p] = targets[p] ? 0.0 : kInf;
    squared_edt_2d(grid, targets.width(), targets.height());
    return grid;
}

std::vector<std::pair<int, int>> disk_offsets(int radius) {
    std::vector<std::pair<int, int>> offsets;
    for (int dy = -radius; dy <= radius; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx) {
            if (dx * dx + dy * dy <= radius * radius) offsets.emplace_back(dx, dy);
        }
    }
    return offsets;
}

BinaryMask erode(const BinaryMask& mask, int radius) {
    if (radius < 1) throw InvalidArgument("erode: radius must be >= 1");
    const auto disk = disk_offsets(radius);
    const int w = mask.width();
    const int h = mask.height();
    BinaryMask out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!mask.at(x, y)) continue;
            bool keep = true;
            for (auto [dx, dy] : disk) {
                const int qx = x + dx;
                const int qy = y + dy;
                if (qx < 0 || qy < 0 || qx >= w || qy >= h) continue;
                if (!mask.at(qx, qy)) {
                    keep = false;
                    break;
                }
            }
            out.set(x, y, keep);
        }
    }
    return out;
}

BinaryMask dilate(const BinaryMask& mask, int radius) {
    if (radius < 1) throw InvalidArgument("dilate: radius must be >= 1");
    const auto disk = disk_offsets(radius);
    const int w = mask.width();
    const int h = mask.height();
    BinaryMask out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!mask.at(x, y)) continue;
            for (auto [dx, dy] : disk) {
                const int qx = x + dx;
                const int qy = y + dy;
                if (qx >= 0 && qy >= 0 && qx < w && qy < h) out.set(qx, qy);
            }
        }
    }
    return out;
}

BinaryMask morphological_open(const BinaryMask& mask, int radius) {
    if (radius < 1) throw InvalidArgument("morphological_open: radius must be >= 1");
    return dilate(erode(mask, radius), radius);
}

BinaryMask label_mask(const LabelMap& map, Label label) {
    BinaryMask mask(map.width(), map.height());
    for (std::size_t p = 0; p < map.size(); ++p) mask.set(p, map[p] == label);
    return mask;
}

}  // namespace superpix
