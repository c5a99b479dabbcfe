#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "superpix/bench.hpp"
#include "superpix/io.hpp"
#include "superpix/slic.hpp"

using namespace superpix;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    for (std::string line; std::getline(ss, line);) out.push_back(line);
    return out;
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::size_t column(const std::vector<std::string>& header, const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    REQUIRE(it != header.end());
    return static_cast<std::size_t>(it - header.begin());
}

SyntheticDatasetParams small_set(std::size_t images, std::uint64_t seed = 1) {
    SyntheticDatasetParams p;
    p.images = images;
    p.scene = {.width = 64, .height = 48, .regions = 5, .min_region = 96, .texture = 10, .noise_sigma = 3, .seed = seed};
    return p;
}

// Exactly 2k row-major chunks, like methods that overshoot the requested count.
Method doubling_method() {
    return {"doubling", false, false, [](const MethodInput& in) {
                const std::size_t n = in.image.pixel_count();
                const std::size_t chunks = 2 * in.config.k;
                LabelMap m(in.image.width(), in.image.height());
                for (std::size_t p = 0; p < n; ++p) m[p] = static_cast<Label>(p * chunks / n);
                return m;
            }};
}

std::uint64_t image_hash(const Image& img) {
    std::uint64_t h = 1469598103934665603ull;
    for (double v : img.data()) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        h = (h ^ bits) * 1099511628211ull;
    }
    return h;
}

}  // namespace

TEST_CASE("load_dataset") {
    oracle::TempDir tmp("dataset");

    SUBCASE("two images with one groundtruth each") {
        write_synthetic_dataset(tmp.path, small_set(2));
        const Dataset ds = load_dataset(tmp.path);
        REQUIRE(ds.entries.size() == 2);
        CHECK(ds.entries[0].name == "img_000");
        CHECK(ds.entries[1].name == "img_001");
        CHECK(ds.entries[0].groundtruths.size() == 1);
        CHECK(ds.entries[0].prior.has_value());
        CHECK_FALSE(ds.entries[0].external.has_value());
    }

    SUBCASE("many groundtruths in numeric order, csv and png mixed") {
        fs::create_directories(tmp.path / "images");
        fs::create_directories(tmp.path / "groundtruth" / "b");
        save_image(Image(4, 4, 3, 10.0), tmp.path / "images" / "b.png");
        save_image(Image(4, 4, 3, 10.0), tmp.path / "images" / "a.png");
        fs::create_directories(tmp.path / "groundtruth" / "a");
        save_label_map(LabelMap(4, 4), tmp.path / "groundtruth" / "a" / "gt_0.csv");
        for (int j : {0, 1, 2, 10, 3}) save_label_map(LabelMap(4, 4), tmp.path / "groundtruth" / "b" / ("gt_" + std::to_string(j) + ".png"));
        std::ofstream(tmp.path / "groundtruth" / "b" / "notes.txt") << "ignored";
        const Dataset ds = load_dataset(tmp.path);
        REQUIRE(ds.entries.size() == 2);
        CHECK(ds.entries[0].name == "a");
        REQUIRE(ds.entries[1].groundtruths.size() == 5);
        CHECK(ds.entries[1].groundtruths[3].filename() == "gt_3.png");
        CHECK(ds.entries[1].groundtruths[4].filename() == "gt_10.png");
    }

    SUBCASE("missing groundtruth lists the images") {
        fs::create_directories(tmp.path / "images");
        save_image(Image(4, 4, 3), tmp.path / "images" / "lonely.png");
        save_image(Image(4, 4, 3), tmp.path / "images" / "orphan.png");
        try {
            load_dataset(tmp.path);
            FAIL("expected IoError");
        } catch (const IoError& e) {
            const std::string what = e.what();
            CHECK(what.find("lonely") != std::string::npos);
            CHECK(what.find("orphan") != std::string::npos);
        }
        CHECK(load_dataset(tmp.path, true).entries.size() == 2);
    }

    SUBCASE("no images directory") { CHECK_THROWS_AS(load_dataset(tmp.path / "nothing"), IoError); }
}

TEST_CASE("method registry") {
    const MethodRegistry reg = MethodRegistry::builtin();
    CHECK(reg.ids() == std::vector<std::string>{"external-labelmaps", "maskslic-full", "prior-pipeline", "slic"});
    CHECK_THROWS_AS(reg.get("watershed"), InvalidArgument);
}

TEST_CASE("run_scale_sweep") {
    oracle::TempDir tmp("scale");
    write_synthetic_dataset(tmp.path, small_set(2));
    const Dataset ds = load_dataset(tmp.path);
    MethodRegistry reg = MethodRegistry::builtin();
    BenchOptions quiet;
    quiet.timing = false;

    SUBCASE("one k, one image") {
        Dataset one = ds;
        one.entries.resize(1);
        const BenchRun run = run_scale_sweep(one, reg, "slic", {100}, 10);
        REQUIRE(run.aggregates.size() == 1);
        REQUIRE(run.rows.size() == 1);
        CHECK(run.aggregates[0].k_generated == double(run.rows[0].report.k_generated));
        CHECK(run.rows[0].report.time_ms.has_value());
        CHECK(run.rows[0].error.empty());
    }

    SUBCASE("overshooting method: x-axis and VSN") {
        reg.add(doubling_method());
        const BenchRun run = run_scale_sweep(ds, reg, "doubling", {40, 10, 25}, 10, quiet);
        REQUIRE(run.aggregates.size() == 3);
        const std::size_t expected[] = {10, 25, 40};
        for (std::size_t i = 0; i < 3; ++i) {
            const AggregateRow& a = run.aggregates[i];
            CHECK(a.k_requested == expected[i]);
            CHECK(a.k_generated == double(2 * expected[i]));
            REQUIRE(a.vsn.has_value());
            CHECK(*a.vsn == double(expected[i] * expected[i]));
        }
        // Aggregate CSV is keyed by mean k_generated and sorted on it.
        const auto csv = lines(aggregate_csv(run));
        const auto header = split(csv[0]);
        const std::size_t kg = column(header, "k_generated");
        double prev = -1;
        for (std::size_t i = 1; i < csv.size(); ++i) {
            const double x = std::stod(split(csv[i])[kg]);
            CHECK(x > prev);
            prev = x;
        }
    }

    SUBCASE("failing rows are recorded and the run continues") {
        reg.add({"flaky", true, false, [](const MethodInput& in) {
                     if (in.entry.name == "img_001") throw Error("boom");
                     return LabelMap(in.image.width(), in.image.height());
                 }});
        const BenchRun run = run_scale_sweep(ds, reg, "flaky", {5}, 10, quiet);
        REQUIRE(run.rows.size() == 2);
        CHECK(run.rows[0].error.empty());
        CHECK(run.rows[1].error == "boom");
        CHECK(run.failures() == 1);
        CHECK(run.aggregates[0].images == 1);
        CHECK(run.aggregates[0].failures == 1);
        const auto csv = lines(rows_csv(run));
        const auto header = split(csv[0]);
        CHECK(split(csv[2])[column(header, "error")] == "boom");
        CHECK(split(csv[2])[column(header, "asa")].empty());
    }

    SUBCASE("external label maps: metrics without timing") {
        for (const DatasetEntry& e : ds.entries) {
            fs::create_directories(tmp.path / "external" / e.name);
            const Image img = load_image(e.image);
            save_label_map(run_slic(img, SlicParams{.k = 12}), tmp.path / "external" / e.name / "12.csv");
        }
        const Dataset with_external = load_dataset(tmp.path);
        const BenchRun run = run_scale_sweep(with_external, reg, "external-labelmaps", {12, 30}, 10);
        CHECK(run.rows[0].error.empty());
        CHECK_FALSE(run.rows[0].report.time_ms.has_value());
        CHECK(run.rows[0].report.asa.has_value());
        CHECK_FALSE(run.rows[1].error.empty());  // no 30.csv
    }

    SUBCASE("prior pipeline reads the dataset priors") {
        const BenchRun run = run_scale_sweep(ds, reg, "prior-pipeline", {30}, 10, quiet);
        for (const BenchRow& row : run.rows) {
            CHECK(row.error.empty());
            CHECK(*row.report.asa == doctest::Approx(1.0));
            CHECK(row.prefilter);
        }
    }

    SUBCASE("thread count does not change results") {
        BenchOptions one = quiet, many = quiet;
        one.threads = 1;
        many.threads = 3;
        BenchRun a = run_scale_sweep(ds, reg, "slic", {20, 40}, 10, one);
        BenchRun b = run_scale_sweep(ds, reg, "slic", {20, 40}, 10, many);
        a.threads = b.threads = 0;
        CHECK(rows_csv(a) == rows_csv(b));
        CHECK(aggregate_csv(a) == aggregate_csv(b));
    }
}

TEST_CASE("count deviation on BSD-sized images stays around ten percent") {
    oracle::TempDir tmp("bsd");
    SyntheticDatasetParams p;
    p.images = 2;
    p.priors = false;
    p.scene = {.width = 481, .height = 321, .regions = 12, .min_region = 400, .texture = 15, .noise_sigma = 5, .seed = 1};
    write_synthetic_dataset(tmp.path, p);
    BenchOptions quiet;
    quiet.timing = false;
    const BenchRun run = run_scale_sweep(load_dataset(tmp.path), MethodRegistry::builtin(), "slic",
                                         {50, 100, 200, 300, 400, 600, 800, 1000}, 10, quiet);
    for (const AggregateRow& a : run.aggregates) {
        const double dev = std::abs(a.k_generated - double(a.k_requested)) / double(a.k_requested);
        CHECK(dev <= 0.10);
    }
}

TEST_CASE("run_noise_experiment") {
    oracle::TempDir tmp("noise");
    write_synthetic_dataset(tmp.path, small_set(3));
    const Dataset ds = load_dataset(tmp.path);
    MethodRegistry reg = MethodRegistry::builtin();
    BenchOptions quiet;
    quiet.timing = false;

    SUBCASE("no specs: clean raw and clean filtered") {
        const BenchRun run = run_noise_experiment(ds, reg, "slic", 20, {}, 10, quiet);
        REQUIRE(run.aggregates.size() == 2);
        CHECK(run.aggregates[0].noise == "clean");
        CHECK_FALSE(run.aggregates[0].prefilter);
        CHECK(run.aggregates[1].prefilter);
    }

    SUBCASE("paired noisy inputs") {
        std::mutex mu;
        std::map<std::pair<std::string, bool>, std::set<std::uint64_t>> seen;
        reg.add({"probe", true, false, [&](const MethodInput& in) {
                     std::lock_guard lock(mu);
                     seen[{in.entry.name, in.config.prefilter.value_or(false)}].insert(image_hash(in.image));
                     return LabelMap(in.image.width(), in.image.height());
                 }});
        const std::vector<NoiseSpec> specs = {NoiseSpec::gaussian(20, 5), NoiseSpec::salt_pepper(0.02, 5)};
        const BenchRun run = run_noise_experiment(ds, reg, "probe", 10, specs, 10, quiet);
        CHECK(run.aggregates.size() == 6);
        CHECK(run.rows.size() == 18);
        for (const DatasetEntry& e : ds.entries) {
            const auto& raw = seen[{e.name, false}];
            const auto& filtered = seen[{e.name, true}];
            CHECK(raw.size() == 3);  // clean + two noise draws
            CHECK(raw == filtered);
        }
        CHECK(run.noise == std::vector<std::string>{"clean", "gaussian_var20", "sp_0.02"});
    }

    SUBCASE("same run twice gives identical reports") {
        const std::vector<NoiseSpec> specs = {NoiseSpec::gaussian(20, 9)};
        const BenchRun a = run_noise_experiment(ds, reg, "slic", 20, specs, 10, quiet);
        const BenchRun b = run_noise_experiment(ds, reg, "slic", 20, specs, 10, quiet);
        CHECK(rows_csv(a) == rows_csv(b));
        CHECK(aggregate_csv(a) == aggregate_csv(b));
        CHECK(to_json(a).dump() == to_json(b).dump());
    }

    SUBCASE("invalid spec") {
        CHECK_THROWS_AS(run_noise_experiment(ds, reg, "slic", 20, {NoiseSpec::gaussian(-1)}, 10, quiet),
                        InvalidArgument);
    }
}

TEST_CASE("run_regularity_sweep") {
    oracle::TempDir tmp("reg");
    MethodRegistry reg = MethodRegistry::builtin();
    BenchOptions quiet;
    quiet.timing = false;

    SUBCASE("single m") {
        write_synthetic_dataset(tmp.path, small_set(2));
        const BenchRun run = run_regularity_sweep(load_dataset(tmp.path), reg, "slic", 20, {10}, quiet);
        CHECK(run.aggregates.size() == 1);
        CHECK(run.aggregates[0].m == 10);
    }

    SUBCASE("GR grows with m on textured scenes") {
        SyntheticDatasetParams p;
        p.images = 6;
        p.priors = false;
        p.scene = {.width = 96, .height = 96, .regions = 8, .texture = 20, .seed = 1};
        write_synthetic_dataset(tmp.path, p);
        const BenchRun run =
            run_regularity_sweep(load_dataset(tmp.path), reg, "slic", 200, {1, 5, 10, 20, 40}, quiet);
        REQUIRE(run.aggregates.size() == 5);
        for (std::size_t i = 1; i < 5; ++i)
            CHECK(run.aggregates[i].means.at("gr") >= run.aggregates[i - 1].means.at("gr"));
        CHECK(run.aggregates[4].means.at("gr") > run.aggregates[0].means.at("gr"));
    }

    SUBCASE("low m: denser and less precise contours on textured scenes") {
        SyntheticDatasetParams p;
        p.images = 4;
        p.priors = false;
        p.scene = {.width = 96, .height = 96, .regions = 8, .texture = 20, .seed = 1};
        write_synthetic_dataset(tmp.path, p);
        const BenchRun run = run_regularity_sweep(load_dataset(tmp.path), reg, "slic", 200, {1, 40}, quiet);
        const auto& lo = run.aggregates[0].means;
        const auto& hi = run.aggregates[1].means;
        CHECK(lo.at("cd") > hi.at("cd"));
        CHECK(lo.at("precision") < hi.at("precision"));
    }
}

TEST_CASE("emit_report") {
    oracle::TempDir tmp("emit");
    MethodRegistry reg = MethodRegistry::builtin();
    BenchOptions quiet;
    quiet.timing = false;

    SUBCASE("empty run writes headers only") {
        BenchRun run;
        run.protocol = "scale";
        run.method = "slic";
        emit_report(run, tmp.path / "empty", ReportFormat::csv);
        CHECK(lines(read_file(tmp.path / "empty" / "rows.csv")).size() == 1);
        CHECK(lines(read_file(tmp.path / "empty" / "aggregate.csv")).size() == 1);
        CHECK(split(lines(read_file(tmp.path / "empty" / "rows.csv"))[0]) == row_columns());
    }

    SUBCASE("one row, fixed columns, byte-identical re-emission") {
        write_synthetic_dataset(tmp.path / "ds", small_set(1));
        const BenchRun run = run_scale_sweep(load_dataset(tmp.path / "ds"), reg, "slic", {16}, 10, quiet);
        emit_report(run, tmp.path / "a", ReportFormat::csv);
        emit_report(run, tmp.path / "b", ReportFormat::csv);
        emit_report(run, tmp.path / "a", ReportFormat::json);
        emit_report(run, tmp.path / "b", ReportFormat::json);
        const std::string rows = read_file(tmp.path / "a" / "rows.csv");
        const auto rl = lines(rows);
        REQUIRE(rl.size() == 2);
        CHECK(split(rl[0]) == row_columns());
        CHECK(split(rl[1]).size() == row_columns().size());
        CHECK(rows == read_file(tmp.path / "b" / "rows.csv"));
        CHECK(read_file(tmp.path / "a" / "aggregate.csv") == read_file(tmp.path / "b" / "aggregate.csv"));
        CHECK(read_file(tmp.path / "a" / "report.json") == read_file(tmp.path / "b" / "report.json"));

        const auto j = nlohmann::json::parse(read_file(tmp.path / "a" / "report.json"));
        CHECK(j["rows"].size() == 1);
        CHECK(j["aggregate"][0]["k_generated"] == run.aggregates[0].k_generated);
        CHECK(j["language"] == "C++20");
        CHECK_FALSE(j["rows"][0].contains("time_ms"));
        const auto header = split(rl[0]);
        CHECK(split(rl[1])[column(header, "language")] == "C++20");
    }
}

TEST_CASE("resolve_threads") {
    ::setenv("SUPERPIX_THREADS", "2", 1);
    CHECK(resolve_threads(8) == 2);
    CHECK(resolve_threads(1) == 1);
    ::setenv("SUPERPIX_THREADS", "junk", 1);
    CHECK(resolve_threads(5) == 5);
    ::unsetenv("SUPERPIX_THREADS");
    CHECK(resolve_threads(3) == 3);
    CHECK(resolve_threads(0) >= 1);
}
