#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "doctest.h"
#include "oracles.hpp"
#include "superpix/color.hpp"
#include "superpix/io.hpp"
#include "superpix/metrics.hpp"
#include "superpix/priorseg.hpp"
#include "superpix/raster.hpp"
#include "superpix/slic.hpp"
#include "superpix/synth.hpp"

using namespace superpix;
namespace fs = std::filesystem;

namespace {

BinaryMask rect(int w, int h, int x0, int y0, int x1, int y1) {
    BinaryMask m(w, h);
    for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) m.set(x, y);
    return m;
}

ObjectPrior make_prior(int w, int h, std::vector<BinaryMask> masks) {
    ObjectPrior p;
    p.image = "test";
    p.width = w;
    p.height = h;
    p.masks = std::move(masks);
    return p;
}

std::multiset<std::size_t> object_areas(const RegionPartition& part) {
    std::multiset<std::size_t> out;
    for (std::size_t r = 0; r < part.count(); ++r)
        if (part.provenance[r] == Provenance::object) out.insert(part.areas[r]);
    return out;
}

std::set<Label> labels_in(const LabelMap& m, const LabelMap& regions, Label region) {
    std::set<Label> out;
    for (std::size_t p = 0; p < m.size(); ++p)
        if (regions[p] == region) out.insert(m[p]);
    return out;
}

// Adjacent pixels both labeled before assignment but in different regions keep different labels.
bool region_boundaries_kept(const PipelineResult& r) {
    const LabelMap& regions = r.partition.regions;
    const int w = regions.width(), h = regions.height();
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const std::pair<int, int> nbrs[] = {{x + 1, y}, {x, y + 1}};
            for (auto [qx, qy] : nbrs) {
                if (qx >= w || qy >= h) continue;
                if (r.segmented.at(x, y) == kUnlabeled || r.segmented.at(qx, qy) == kUnlabeled) continue;
                if (regions.at(x, y) != regions.at(qx, qy) && r.labels.at(x, y) == r.labels.at(qx, qy)) return false;
            }
        }
    return true;
}

// Exhaustive nearest (mean Lab, centroid) search written independently of the library loop.
LabelMap brute_assignment(const LabelMap& seg, const Image& img, double m) {
    const LabImage lab = to_lab_features(img);
    std::map<Label, std::array<double, 6>> acc;  // L, a, b, x, y, count
    for (int y = 0; y < seg.height(); ++y)
        for (int x = 0; x < seg.width(); ++x) {
            const Label l = seg.at(x, y);
            if (l == kUnlabeled) continue;
            const double* c = lab.pixel(static_cast<std::size_t>(y) * seg.width() + x);
            auto& a = acc[l];
            a[0] += c[0], a[1] += c[1], a[2] += c[2], a[3] += x, a[4] += y, a[5] += 1;
        }
    const double s2 = double(seg.size()) / double(acc.size());
    LabelMap out = seg;
    for (int y = 0; y < seg.height(); ++y)
        for (int x = 0; x < seg.width(); ++x) {
            if (seg.at(x, y) != kUnlabeled) continue;
            const double* c = lab.pixel(static_cast<std::size_t>(y) * seg.width() + x);
            double best = std::numeric_limits<double>::infinity();
            for (auto& [l, a] : acc) {
                double d = 0;
                for (int i = 0; i < 3; ++i) d += std::pow(c[i] - a[i] / a[5], 2);
                d += m * m * (std::pow(x - a[3] / a[5], 2) + std::pow(y - a[4] / a[5], 2)) / s2;
                if (d < best) {
                    best = d;
                    out.at(x, y) = l;
                }
            }
        }
    return out;
}

synth::Scene scene(std::uint64_t seed, int w = 120, int h = 96, int regions = 8) {
    return synth::random_scene({.width = w, .height = h, .regions = regions, .min_region = 160, .texture = 12,
                                .noise_sigma = 4, .seed = seed});
}

}  // namespace

TEST_CASE("object prior files") {
    oracle::TempDir tmp("prior");

    SUBCASE("empty prior") {
        const fs::path dir = tmp.path / "empty";
        save_object_prior(make_prior(7, 5, {}), dir);
        const ObjectPrior p = load_object_prior(dir);
        CHECK(p.masks.empty());
        CHECK(p.width == 7);
        CHECK(p.height == 5);
        CHECK(p.image == "test");
    }

    SUBCASE("round trip keeps masks and order") {
        std::mt19937 rng(2);
        std::vector<BinaryMask> masks = {rect(12, 9, 0, 0, 3, 3), rect(12, 9, 5, 0, 8, 4), rect(12, 9, 0, 6, 12, 9)};
        masks.push_back(oracle::random_mask(rng, 12, 9, 0.4));
        const fs::path dir = tmp.path / "p";
        save_object_prior(make_prior(12, 9, masks), dir);
        CHECK(fs::exists(dir / "mask_000.png"));
        CHECK(fs::exists(dir / "mask_003.png"));
        const ObjectPrior p = load_object_prior(dir);
        REQUIRE(p.masks.size() == masks.size());
        for (std::size_t i = 0; i < masks.size(); ++i) CHECK(p.masks[i] == masks[i]);
        CHECK(p.source == "synthetic");
    }

    SUBCASE("manifest as written by an external exporter") {
        const fs::path dir = tmp.path / "ext";
        fs::create_directories(dir);
        std::ofstream(dir / "manifest.json")
            << R"({"image": "photo.png", "width": 4, "height": 3, "count": 1, "source": "sam-vit-h"})";
        save_mask(rect(4, 3, 1, 1, 3, 2), dir / "mask_000.png");
        const ObjectPrior p = load_object_prior(dir);
        CHECK(p.source == "sam-vit-h");
        CHECK(p.image == "photo.png");
        REQUIRE(p.masks.size() == 1);
        CHECK(p.masks[0].count() == 2);
    }

    SUBCASE("malformed manifest names the file") {
        const fs::path dir = tmp.path / "bad";
        fs::create_directories(dir);
        std::ofstream(dir / "manifest.json") << R"({"width": 4, "height": "x", "count": 0})";
        try {
            load_object_prior(dir);
            FAIL("expected IoError");
        } catch (const IoError& e) {
            CHECK(std::string(e.what()).find("manifest.json") != std::string::npos);
        }
    }

    SUBCASE("missing mask and shape mismatch") {
        const fs::path dir = tmp.path / "short";
        save_object_prior(make_prior(4, 4, {rect(4, 4, 0, 0, 2, 2)}), dir);
        fs::remove(dir / "mask_000.png");
        CHECK_THROWS_AS(load_object_prior(dir), IoError);
        save_mask(rect(5, 4, 0, 0, 2, 2), dir / "mask_000.png");
        CHECK_THROWS_AS(load_object_prior(dir), IoError);
        CHECK_THROWS_AS(load_object_prior(tmp.path / "absent"), IoError);
    }
}

TEST_CASE("normalize_prior") {
    PipelineParams params;
    params.min_area = 1;

    SUBCASE("mask inside a larger mask") {
        const BinaryMask a = rect(20, 20, 5, 3, 10, 5);  // 10 px
        const BinaryMask b = rect(20, 20, 2, 2, 12, 7);  // 50 px, surrounds A
        const RegionPartition part = normalize_prior(make_prior(20, 20, {b, a}), params);
        CHECK(object_areas(part) == std::multiset<std::size_t>{10, 40});
        CHECK(part.regions.at(6, 4) == 0);
        CHECK(part.regions.at(2, 2) == 1);
    }

    SUBCASE("subtraction that fragments a mask") {
        // A cuts B into a 15 px and a 25 px piece; each fragment becomes its own region.
        const BinaryMask a = rect(20, 20, 3, 0, 5, 5);
        const BinaryMask b = rect(20, 20, 0, 0, 10, 5);
        const RegionPartition part = normalize_prior(make_prior(20, 20, {b, a}), params);
        CHECK(object_areas(part) == std::multiset<std::size_t>{10, 15, 25});
    }

    SUBCASE("overlap goes to the smaller mask") {
        // 30 px and 40 px sharing a 5 px column.
        const BinaryMask small = rect(30, 10, 0, 0, 6, 5);   // 30
        const BinaryMask large = rect(30, 10, 5, 0, 13, 5);  // 40, overlap x=5 rows 0..4
        const RegionPartition part = normalize_prior(make_prior(30, 10, {large, small}), params);
        CHECK(object_areas(part) == std::multiset<std::size_t>{30, 35});
        CHECK(part.regions.at(5, 2) == part.regions.at(0, 0));
        CHECK(part.provenance[0] == Provenance::object);
        CHECK(part.areas[0] == 30);
    }

    SUBCASE("equal areas: lower index is treated as smaller") {
        const BinaryMask m0 = rect(10, 4, 0, 0, 6, 4);
        const BinaryMask m1 = rect(10, 4, 4, 0, 10, 4);
        const RegionPartition part = normalize_prior(make_prior(10, 4, {m0, m1}), params);
        CHECK(part.regions.at(4, 0) == 0);
        CHECK(object_areas(part) == std::multiset<std::size_t>{24, 16});
    }

    SUBCASE("small masks are dropped") {
        PipelineParams p = params;
        p.min_area = 20;
        const RegionPartition part =
            normalize_prior(make_prior(40, 40, {rect(40, 40, 0, 0, 4, 4), rect(40, 40, 10, 10, 20, 20)}), p);
        CHECK(object_areas(part) == std::multiset<std::size_t>{100});
    }

    SUBCASE("thin seam stays unlabeled") {
        const BinaryMask left = rect(40, 30, 0, 0, 19, 30);
        const BinaryMask right = rect(40, 30, 21, 0, 40, 30);
        PipelineParams p;
        p.min_area = 64;
        p.opening_radius = 3;
        const RegionPartition part = normalize_prior(make_prior(40, 30, {left, right}), p);
        CHECK(part.count() == 2);
        CHECK(std::count(part.provenance.begin(), part.provenance.end(), Provenance::background) == 0);
        for (int y = 0; y < 30; ++y) {
            CHECK(part.regions.at(19, y) == kUnlabeled);
            CHECK(part.regions.at(20, y) == kUnlabeled);
        }
    }

    SUBCASE("large leftover becomes background") {
        PipelineParams p;
        p.min_area = 64;
        const RegionPartition part = normalize_prior(make_prior(40, 30, {rect(40, 30, 0, 0, 15, 30)}), p);
        REQUIRE(part.count() == 2);
        CHECK(part.provenance[1] == Provenance::background);
        CHECK(part.areas[1] == 25 * 30);
    }

    SUBCASE("empty prior is one background region") {
        const RegionPartition part = normalize_prior(make_prior(17, 11, {}), PipelineParams{});
        REQUIRE(part.count() == 1);
        CHECK(part.provenance[0] == Provenance::background);
        CHECK(part.areas[0] == 17 * 11);
        CHECK_FALSE(part.regions.has_unlabeled());
    }

    SUBCASE("partition invariants on random overlapping priors") {
        std::mt19937 rng(6);
        std::uniform_int_distribution<int> coord(0, 47);
        PipelineParams p;
        p.min_area = 30;
        for (int trial = 0; trial < 30; ++trial) {
            std::vector<BinaryMask> masks;
            for (int i = 0; i < 6; ++i) {
                int x0 = coord(rng), x1 = coord(rng), y0 = coord(rng), y1 = coord(rng);
                if (x0 > x1) std::swap(x0, x1);
                if (y0 > y1) std::swap(y0, y1);
                masks.push_back(rect(48, 48, x0, y0, x1 + 1, y1 + 1));
            }
            const RegionPartition part = normalize_prior(make_prior(48, 48, masks), p);
            CHECK(oracle::all_labels_connected(part.regions));
            std::vector<std::size_t> counted(part.count(), 0);
            for (std::size_t q = 0; q < part.regions.size(); ++q)
                if (part.regions[q] != kUnlabeled) ++counted[part.regions[q]];
            for (std::size_t r = 0; r < part.count(); ++r) {
                CHECK(counted[r] == part.areas[r]);
                CHECK(part.areas[r] >= 30);
            }
            // Every object pixel belongs to a mask; pixels of a kept region come from a single mask.
            for (std::size_t r = 0; r < part.count(); ++r) {
                if (part.provenance[r] != Provenance::object) continue;
                bool some_mask_covers = false;
                for (const BinaryMask& m : masks) {
                    bool covers = true;
                    for (std::size_t q = 0; q < m.size() && covers; ++q)
                        if (part.regions[q] == static_cast<Label>(r) && !m[q]) covers = false;
                    some_mask_covers |= covers;
                }
                CHECK(some_mask_covers);
            }
        }
    }

    SUBCASE("shape mismatch") {
        CHECK_THROWS_AS(normalize_prior(make_prior(10, 10, {BinaryMask(9, 10)}), params), InvalidArgument);
    }
}

TEST_CASE("allocate_budgets") {
    auto partition = [](std::vector<std::size_t> areas) {
        RegionPartition p;
        p.areas = std::move(areas);
        p.provenance.assign(p.areas.size(), Provenance::object);
        return p;
    };

    CHECK(allocate_budgets(partition({500}), 37) == std::vector<std::size_t>{37});
    CHECK(allocate_budgets(partition({96, 160}), 8) == std::vector<std::size_t>{3, 5});

    SUBCASE("small regions get at least one") {
        std::vector<std::size_t> areas(10, 100);
        areas.push_back(9000);
        const auto b = allocate_budgets(partition(areas), 10);
        for (int i = 0; i < 10; ++i) CHECK(b[i] == 1);
        CHECK(b[10] == 9);
    }

    SUBCASE("budget never exceeds area") {
        const auto b = allocate_budgets(partition({2, 998}), 500);
        CHECK(b[0] == 1);
        CHECK(b[1] == 499);
        const auto c = allocate_budgets(partition({3, 3}), 50);
        CHECK(c == std::vector<std::size_t>{3, 3});
    }

    SUBCASE("largest remainder hits k when no floor applies") {
        std::mt19937 rng(9);
        std::uniform_int_distribution<std::size_t> area(200, 2000);
        for (int trial = 0; trial < 100; ++trial) {
            std::vector<std::size_t> areas(1 + trial % 9);
            for (auto& a : areas) a = area(rng);
            const std::size_t k = 50 + trial;
            const auto b = allocate_budgets(partition(areas), k);
            const std::size_t sum = std::accumulate(b.begin(), b.end(), std::size_t{0});
            CHECK(sum >= k);
            CHECK(sum <= k + areas.size());
            // Each count is the floor or the ceiling of its quota, apart from the one-superpixel floor.
            const double total = std::accumulate(areas.begin(), areas.end(), 0.0);
            for (std::size_t r = 0; r < areas.size(); ++r) {
                const double quota = double(k) * double(areas[r]) / total;
                CHECK(double(b[r]) >= std::floor(quota));
                CHECK(double(b[r]) <= std::max(1.0, std::ceil(quota)));
            }
        }
    }

    CHECK_THROWS_AS(allocate_budgets(partition({}), 5), InvalidArgument);
}

TEST_CASE("segment_regions") {
    SUBCASE("full-image region equals maskSLIC on the full mask") {
        const auto s = scene(3, 64, 48);
        RegionPartition part;
        part.regions = LabelMap(64, 48);
        part.areas = {64 * 48};
        part.provenance = {Provenance::background};
        PipelineParams p;
        p.k = 30;
        const std::size_t budgets[] = {30};
        SlicParams sp{.k = 30, .m = p.m, .prefilter = true};
        CHECK(segment_regions(s.image, part, budgets, p) == run_mask_slic(s.image, BinaryMask(64, 48, true), sp));
    }

    SUBCASE("vertical object in 16x16") {
        Image img(16, 16, 3, 40.0);
        LabelMap regions(16, 16, 1);
        for (int y = 0; y < 16; ++y)
            for (int x = 0; x < 6; ++x) {
                regions.at(x, y) = 0;
                for (int c = 0; c < 3; ++c) img.at(x, y, c) = 200;
            }
        RegionPartition part{regions, {96, 160}, {Provenance::object, Provenance::background}};
        const auto budgets = allocate_budgets(part, 8);
        REQUIRE(budgets == std::vector<std::size_t>{3, 5});
        PipelineParams p;
        p.k = 8;
        const LabelMap seg = segment_regions(img, part, budgets, p);
        const auto in_object = labels_in(seg, regions, 0);
        const auto in_background = labels_in(seg, regions, 1);
        CHECK(in_object.size() == 3);
        CHECK(in_background.size() == 5);
        for (Label l : in_object) CHECK(in_background.count(l) == 0);
    }

    SUBCASE("sentinel stays unlabeled") {
        LabelMap regions(20, 10, 0);
        for (int y = 0; y < 10; ++y) regions.at(10, y) = kUnlabeled;
        for (int y = 0; y < 10; ++y)
            for (int x = 11; x < 20; ++x) regions.at(x, y) = 1;
        RegionPartition part{regions, {100, 90}, {Provenance::object, Provenance::object}};
        const std::size_t budgets[] = {4, 3};
        const LabelMap seg = segment_regions(Image(20, 10, 3, 9.0), part, budgets, PipelineParams{});
        for (int y = 0; y < 10; ++y) CHECK(seg.at(10, y) == kUnlabeled);
        CHECK(labels_in(seg, regions, 0).size() == 4);
        CHECK(labels_in(seg, regions, 1).size() == 3);
    }

    SUBCASE("budget count must match") {
        RegionPartition part{LabelMap(4, 4), {16}, {Provenance::object}};
        CHECK_THROWS_AS(segment_regions(Image(4, 4, 3), part, std::vector<std::size_t>{}, PipelineParams{}),
                        InvalidArgument);
    }
}

TEST_CASE("assign_unlabeled") {
    SUBCASE("nothing to assign") {
        const LabelMap seg = synth::square_tiling(8, 8, 4);
        CHECK(assign_unlabeled(seg, Image(8, 8, 3, 1.0), 10) == seg);
    }

    SUBCASE("pixel joins the adjacent same-colour superpixel") {
        Image img(20, 4, 3, 30.0);
        LabelMap seg(20, 4, 0);
        for (int y = 0; y < 4; ++y)
            for (int x = 10; x < 20; ++x) {
                seg.at(x, y) = 1;
                for (int c = 0; c < 3; ++c) img.at(x, y, c) = 220;
            }
        seg.at(9, 2) = kUnlabeled;
        const LabelMap out = assign_unlabeled(seg, img, 10);
        CHECK(out.at(9, 2) == out.at(0, 0));
        CHECK_FALSE(out.has_unlabeled());
    }

    SUBCASE("random 16x16 matches the exhaustive oracle") {
        std::mt19937 rng(13);
        std::uniform_real_distribution<double> val(0, 255);
        for (int trial = 0; trial < 10; ++trial) {
            Image img(16, 16, 3);
            for (double& v : img.data()) v = val(rng);
            LabelMap seg = synth::square_tiling(16, 16, 4);
            std::bernoulli_distribution hole(0.2);
            for (std::size_t p = 0; p < seg.size(); ++p)
                if (hole(rng)) seg[p] = kUnlabeled;
            const double m = 1.0 + trial * 4.0;
            const LabelMap expected = brute_assignment(seg, img, m);
            CHECK(nearest_superpixel_assignment(seg, img, m) == expected);
            const LabelMap out = assign_unlabeled(seg, img, m);
            CHECK_FALSE(out.has_unlabeled());
            CHECK(oracle::all_labels_connected(out));
            CHECK(out.count_labels() <= oracle::flood_fill_count(seg, false, true));
        }
    }

    SUBCASE("detached pieces are merged, labeled pixels keep their groups") {
        // Label 0 on the left, label 1 on the right; a sentinel island inside label 1 with label 0's colour.
        Image img(20, 20, 3, 200.0);
        LabelMap seg(20, 20, 1);
        for (int y = 0; y < 20; ++y)
            for (int x = 0; x < 6; ++x) {
                seg.at(x, y) = 0;
                for (int c = 0; c < 3; ++c) img.at(x, y, c) = 10;
            }
        for (int y = 8; y < 11; ++y)
            for (int x = 14; x < 17; ++x) {
                seg.at(x, y) = kUnlabeled;
                for (int c = 0; c < 3; ++c) img.at(x, y, c) = 10;
            }
        const LabelMap raw = nearest_superpixel_assignment(seg, img, 0.1);
        CHECK(raw.at(15, 9) == 0);
        const LabelMap out = assign_unlabeled(seg, img, 0.1);
        CHECK(out.count_labels() == 2);
        CHECK(out.at(15, 9) == out.at(19, 19));
        CHECK(oracle::all_labels_connected(out));
    }

    SUBCASE("all unlabeled") {
        CHECK_THROWS_AS(assign_unlabeled(LabelMap(4, 4, kUnlabeled), Image(4, 4, 3), 10), InvalidArgument);
    }
}

TEST_CASE("run_pipeline") {
    SUBCASE("empty prior degenerates to maskSLIC on the full image") {
        const auto s = scene(4, 64, 64);
        PipelineParams p;
        p.k = 40;
        const PipelineResult r = run_pipeline(s.image, ObjectPrior{}, p);
        CHECK(r.labels == run_mask_slic(s.image, BinaryMask(64, 64, true), SlicParams{.k = 40, .prefilter = true}));
        CHECK(r.stats.regions == 1);
        CHECK(r.stats.background_regions == 1);
    }

    SUBCASE("groundtruth prior gives perfect accuracy") {
        for (std::uint64_t seed = 1; seed <= 4; ++seed) {
            const auto s = scene(seed);
            PipelineParams p;
            p.k = 150;
            const PipelineResult r = run_pipeline(s.image, prior_from_labels(s.groundtruth), p);
            CHECK(std::abs(asa(OverlapTable::build(r.labels, s.groundtruth)) - 1.0) < 1e-9);
            CHECK_FALSE(r.labels.has_unlabeled());
            CHECK(oracle::all_labels_connected(r.labels));
            CHECK(double(r.stats.k_generated) >= 0.85 * 150);
            CHECK(double(r.stats.k_generated) <= 1.15 * 150);
            CHECK(region_boundaries_kept(r));
        }
    }

    SUBCASE("overlapping prior with seams keeps region boundaries") {
        for (std::uint64_t seed = 1; seed <= 4; ++seed) {
            const auto s = scene(seed);
            ObjectPrior prior = prior_from_labels(s.groundtruth);
            // Shrink every object by one pixel so thin seams appear, and add one large overlapping mask.
            for (BinaryMask& m : prior.masks) m = erode(m, 1);
            prior.masks.push_back(rect(120, 96, 10, 10, 80, 70));
            PipelineParams p;
            p.k = 120;
            const PipelineResult r = run_pipeline(s.image, prior, p);
            CHECK(r.stats.unlabeled_pixels > 0);
            CHECK_FALSE(r.labels.has_unlabeled());
            CHECK(oracle::all_labels_connected(r.labels));
            CHECK(region_boundaries_kept(r));
        }
    }

    SUBCASE("richer priors do not lose accuracy") {
        for (std::uint64_t seed = 1; seed <= 4; ++seed) {
            const auto s = scene(seed, 120, 96, 10);
            ObjectPrior coarse = prior_from_labels(s.groundtruth);
            // Coarse prior: fuse objects pairwise.
            ObjectPrior fused = coarse;
            fused.masks.clear();
            for (std::size_t i = 0; i < coarse.masks.size(); i += 2) {
                BinaryMask m = coarse.masks[i];
                if (i + 1 < coarse.masks.size())
                    for (std::size_t q = 0; q < m.size(); ++q) m.set(q, m[q] || coarse.masks[i + 1][q]);
                fused.masks.push_back(m);
            }
            PipelineParams p;
            p.k = 100;
            const PipelineResult fine_r = run_pipeline(s.image, coarse, p);
            const PipelineResult coarse_r = run_pipeline(s.image, fused, p);
            CHECK(asa(OverlapTable::build(fine_r.labels, s.groundtruth)) >=
                  asa(OverlapTable::build(coarse_r.labels, s.groundtruth)));
        }
    }

    SUBCASE("deterministic") {
        const auto s = scene(7);
        const ObjectPrior prior = prior_from_labels(s.groundtruth);
        PipelineParams p;
        p.k = 80;
        CHECK(run_pipeline(s.image, prior, p).labels == run_pipeline(s.image, prior, p).labels);
    }

    SUBCASE("stage errors") {
        try {
            run_pipeline(Image(10, 10, 3), make_prior(8, 8, {BinaryMask(8, 8, true)}), PipelineParams{});
            FAIL("expected StageError");
        } catch (const StageError& e) {
            CHECK(e.stage() == "normalize");
        }
        PipelineParams p;
        p.min_area = 200;
        try {
            run_pipeline(Image(10, 10, 3), make_prior(10, 10, {}), p);
            FAIL("expected StageError");
        } catch (const StageError& e) {
            CHECK(e.stage() == "segment");
        }
    }

    SUBCASE("stats serialise") {
        const auto s = scene(2, 48, 48, 4);
        PipelineParams p;
        p.k = 20;
        const PipelineResult r = run_pipeline(s.image, prior_from_labels(s.groundtruth), p);
        const auto j = to_json(r.stats);
        CHECK(j["k_generated"] == r.stats.k_generated);
        CHECK(j["regions"] == r.stats.regions);
        CHECK(j.contains("segment_ms"));
        CHECK(r.stats.total_ms >= 0.0);
    }
}
