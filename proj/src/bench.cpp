#include "superpix/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <regex>
#include <sstream>
#include <thread>

#include "superpix/format.hpp"
#include "superpix/io.hpp"
#include "superpix/slic.hpp"

namespace superpix {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

const char* const kMetricColumns[] = {"time_ms", "asa", "ue",  "ue_tol5", "cue", "br", "precision",
                                      "cd",      "co",  "src", "smf",     "gr",  "ev", "icv"};

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string csv_line(const std::vector<std::string>& cells) {
    std::string line;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) line += ',';
        line += csv_field(cells[i]);
    }
    return line + "\n";
}

std::string bool_cell(bool v) { return v ? "true" : "false"; }

bool is_image_file(const fs::path& p) {
    const std::string ext = p.extension().string();
    return ext == ".png" || ext == ".ppm" || ext == ".pgm";
}

std::string entry_name(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "img_%03zu", i);
    return buf;
}

struct Config {
    MethodConfig method;
    std::string noise = "clean";
    int noise_index = -1;  // -1: clean image
    bool prefilter = false;
};

struct Loaded {
    Image image;
    std::vector<LabelMap> groundtruths;
    std::optional<ObjectPrior> prior;
    std::vector<Image> noisy;  // one per noise spec
    std::string error;
};

bool resolved_prefilter(const std::string& method, const MethodConfig& c) {
    return c.prefilter.value_or(method == "prior-pipeline");
}

BenchRun run_protocol(const Dataset& ds, const MethodRegistry& registry, const std::string& method_id,
                      const std::vector<Config>& configs, const std::vector<NoiseSpec>& specs,
                      const BenchOptions& options, std::string protocol) {
    const Method& method = registry.get(method_id);
    BenchRun run;
    run.protocol = std::move(protocol);
    run.method = method_id;
    run.threads = resolve_threads(options.threads);

    const std::size_t n_entries = ds.entries.size();
    std::vector<Loaded> loaded(n_entries);
    for (std::size_t e = 0; e < n_entries; ++e) {
        const DatasetEntry& entry = ds.entries[e];
        Loaded& L = loaded[e];
        try {
            L.image = load_image(entry.image);
            for (const fs::path& gt : entry.groundtruths) {
                L.groundtruths.push_back(load_label_map(gt));
                require_same_shape(L.image, L.groundtruths.back(), entry.name.c_str());
            }
            if (method.needs_prior && entry.prior) L.prior = load_object_prior(*entry.prior);
            for (const NoiseSpec& spec : specs) {
                NoiseSpec s = spec;
                s.seed = mix_seed(spec.seed, e);
                L.noisy.push_back(add_noise(L.image, s));
            }
        } catch (const std::exception& ex) {
            L.error = ex.what();
        }
    }

    const std::size_t n_configs = configs.size();
    run.rows.resize(n_entries * n_configs);
    auto evaluate = [&](std::size_t task) {
        const std::size_t e = task / n_configs;
        const std::size_t c = task % n_configs;
        const DatasetEntry& entry = ds.entries[e];
        const Config& cfg = configs[c];
        const Loaded& L = loaded[e];
        BenchRow& row = run.rows[task];
        row.m = cfg.method.m;
        row.noise = cfg.noise;
        row.prefilter = resolved_prefilter(method_id, cfg.method);
        row.report.method = method_id;
        row.report.image = entry.name;
        row.report.k_requested = cfg.method.k;
        if (!L.error.empty()) {
            row.error = L.error;
            return;
        }
        try {
            const Image& input = cfg.noise_index < 0 ? L.image : L.noisy[static_cast<std::size_t>(cfg.noise_index)];
            const MethodInput in{input, entry, L.prior ? &*L.prior : nullptr, cfg.method};
            const auto start = std::chrono::steady_clock::now();
            const LabelMap labels = method.run(in);
            const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
            std::optional<double> time_ms;
            if (options.timing && method.timed) time_ms = ms;
            row.report = full_report(labels, L.groundtruths, &L.image, cfg.method.k, time_ms, options.metrics);
            row.report.method = method_id;
            row.report.image = entry.name;
        } catch (const std::exception& ex) {
            row.error = ex.what();
        }
    };

    const std::size_t tasks = run.rows.size();
    const std::size_t workers = std::max<std::size_t>(1, std::min(run.threads, tasks));
    if (workers <= 1) {
        for (std::size_t t = 0; t < tasks; ++t) evaluate(t);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t t = next++; t < tasks; t = next++) evaluate(t);
            });
        for (std::thread& t : pool) t.join();
    }

    // Rows are already in entry-then-config order; entries are sorted by name.
    for (std::size_t c = 0; c < n_configs; ++c) {
        const Config& cfg = configs[c];
        AggregateRow agg;
        agg.noise = cfg.noise;
        agg.prefilter = resolved_prefilter(method_id, cfg.method);
        agg.m = cfg.method.m;
        agg.k_requested = cfg.method.k;
        std::vector<double> generated;
        std::map<std::string, std::pair<double, std::size_t>> sums;
        for (std::size_t e = 0; e < n_entries; ++e) {
            const BenchRow& row = run.rows[e * n_configs + c];
            if (!row.error.empty()) {
                ++agg.failures;
                continue;
            }
            generated.push_back(static_cast<double>(row.report.k_generated));
            const ordered_json j = to_json(row.report);
            for (const char* col : kMetricColumns) {
                if (!j.contains(col)) continue;
                auto& s = sums[col];
                s.first += j[col].get<double>();
                ++s.second;
            }
        }
        agg.images = generated.size();
        if (!generated.empty()) {
            double total = 0.0;
            for (double g : generated) total += g;
            agg.k_generated = total / static_cast<double>(generated.size());
            agg.vsn = vsn(static_cast<double>(cfg.method.k), generated);
        }
        for (auto& [col, s] : sums) agg.means[col] = s.first / static_cast<double>(s.second);
        run.aggregates.push_back(std::move(agg));
    }
    return run;
}

}  // namespace

Dataset load_dataset(const fs::path& root, bool allow_missing_groundtruth) {
    const fs::path images = root / "images";
    if (!fs::is_directory(images)) throw IoError("dataset has no images directory: " + images.string());
    Dataset ds;
    ds.root = root;
    ds.name = root.filename().string();
    if (ds.name.empty()) ds.name = root.parent_path().filename().string();

    std::vector<fs::path> files;
    for (const auto& f : fs::directory_iterator(images))
        if (f.is_regular_file() && is_image_file(f.path())) files.push_back(f.path());
    std::sort(files.begin(), files.end(),
              [](const fs::path& a, const fs::path& b) { return a.stem().string() < b.stem().string(); });

    const std::regex gt_pattern(R"(gt_(\d+)\.(csv|png))");
    std::vector<std::string> missing;
    for (const fs::path& file : files) {
        DatasetEntry entry;
        entry.name = file.stem().string();
        entry.image = file;
        const fs::path gt_dir = root / "groundtruth" / entry.name;
        std::vector<std::pair<long, fs::path>> gts;
        if (fs::is_directory(gt_dir)) {
            for (const auto& f : fs::directory_iterator(gt_dir)) {
                std::smatch match;
                const std::string fname = f.path().filename().string();
                if (f.is_regular_file() && std::regex_match(fname, match, gt_pattern))
                    gts.emplace_back(std::stol(match[1].str()), f.path());
            }
        }
        std::sort(gts.begin(), gts.end());
        for (auto& [index, path] : gts) entry.groundtruths.push_back(path);
        if (entry.groundtruths.empty()) missing.push_back(entry.name);
        const fs::path prior_dir = root / "priors" / entry.name;
        if (fs::exists(prior_dir / "manifest.json")) entry.prior = prior_dir;
        const fs::path external_dir = root / "external" / entry.name;
        if (fs::is_directory(external_dir)) entry.external = external_dir;
        ds.entries.push_back(std::move(entry));
    }
    if (!missing.empty() && !allow_missing_groundtruth) {
        std::string list;
        for (const std::string& m : missing) list += (list.empty() ? "" : ", ") + m;
        throw IoError("no groundtruth for: " + list);
    }
    return ds;
}

void write_synthetic_dataset(const fs::path& root, const SyntheticDatasetParams& params) {
    fs::create_directories(root / "images");
    for (std::size_t i = 0; i < params.images; ++i) {
        synth::SceneParams sp = params.scene;
        sp.seed = params.scene.seed + i;
        const synth::Scene scene = synth::random_scene(sp);
        const std::string name = entry_name(i);
        save_image(scene.image, root / "images" / (name + ".png"));
        const fs::path gt_dir = root / "groundtruth" / name;
        fs::create_directories(gt_dir);
        for (std::size_t j = 0; j < params.groundtruths; ++j)
            save_label_map(scene.groundtruth, gt_dir / ("gt_" + std::to_string(j) + ".png"), LabelFormat::png16);
        if (params.priors) {
            ObjectPrior prior = prior_from_labels(scene.groundtruth);
            prior.image = name + ".png";
            save_object_prior(prior, root / "priors" / name);
        }
    }
}

MethodRegistry MethodRegistry::builtin() {
    MethodRegistry reg;
    auto slic_params = [](const MethodConfig& c, bool default_prefilter) {
        SlicParams p;
        p.k = c.k;
        p.m = c.m;
        p.iterations = c.iterations;
        p.prefilter = c.prefilter.value_or(default_prefilter);
        p.bilateral = c.bilateral;
        return p;
    };
    reg.add({"slic", true, false, [slic_params](const MethodInput& in) {
                 return run_slic(in.image, slic_params(in.config, false));
             }});
    reg.add({"maskslic-full", true, false, [slic_params](const MethodInput& in) {
                 return run_mask_slic(in.image, BinaryMask(in.image.width(), in.image.height(), true),
                                      slic_params(in.config, false));
             }});
    reg.add({"prior-pipeline", true, true, [](const MethodInput& in) {
                 PipelineParams p;
                 p.k = in.config.k;
                 p.m = in.config.m;
                 p.iterations = in.config.iterations;
                 p.prefilter = in.config.prefilter.value_or(true);
                 p.bilateral = in.config.bilateral;
                 return run_pipeline(in.image, in.prior ? *in.prior : ObjectPrior{}, p).labels;
             }});
    reg.add({"external-labelmaps", false, false, [](const MethodInput& in) {
                 if (!in.entry.external) throw IoError("no external label maps for " + in.entry.name);
                 const std::string stem = std::to_string(in.config.k);
                 for (const char* ext : {".csv", ".png"}) {
                     const fs::path path = *in.entry.external / (stem + ext);
                     if (fs::exists(path)) return load_label_map(path);
                 }
                 throw IoError("no label map for k=" + stem + " in " + in.entry.external->string());
             }});
    return reg;
}

void MethodRegistry::add(Method method) {
    const std::string id = method.id;
    methods_.insert_or_assign(id, std::move(method));
}

const Method& MethodRegistry::get(const std::string& id) const {
    const auto it = methods_.find(id);
    if (it == methods_.end()) throw InvalidArgument("unknown method: " + id);
    return it->second;
}

std::vector<std::string> MethodRegistry::ids() const {
    std::vector<std::string> out;
    for (const auto& [id, m] : methods_) out.push_back(id);
    return out;
}

std::size_t resolve_threads(std::size_t requested) {
    std::size_t n = requested ? requested : std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("SUPERPIX_THREADS")) {
        char* end = nullptr;
        const long cap = std::strtol(env, &end, 10);
        if (end != env && cap > 0) n = std::min(n, static_cast<std::size_t>(cap));
    }
    return std::max<std::size_t>(1, n);
}

std::size_t BenchRun::failures() const {
    return static_cast<std::size_t>(
        std::count_if(rows.begin(), rows.end(), [](const BenchRow& r) { return !r.error.empty(); }));
}

BenchRun run_scale_sweep(const Dataset& ds, const MethodRegistry& registry, const std::string& method,
                         const std::vector<std::size_t>& ks, double m, const BenchOptions& options) {
    std::vector<Config> configs;
    for (std::size_t k : ks) {
        Config c;
        c.method.k = k;
        c.method.m = m;
        configs.push_back(c);
    }
    BenchRun run = run_protocol(ds, registry, method, configs, {}, options, "scale");
    run.ks = ks;
    run.ms = {m};
    std::stable_sort(run.aggregates.begin(), run.aggregates.end(),
                     [](const AggregateRow& a, const AggregateRow& b) { return a.k_generated < b.k_generated; });
    return run;
}

BenchRun run_noise_experiment(const Dataset& ds, const MethodRegistry& registry, const std::string& method,
                              std::size_t k, const std::vector<NoiseSpec>& specs, double m,
                              const BenchOptions& options) {
    for (const NoiseSpec& s : specs) s.validate();
    std::vector<Config> configs;
    auto add = [&](const std::string& noise, int index, bool prefilter) {
        Config c;
        c.method.k = k;
        c.method.m = m;
        c.method.prefilter = prefilter;
        c.noise = noise;
        c.noise_index = index;
        configs.push_back(c);
    };
    add("clean", -1, false);
    add("clean", -1, true);
    for (std::size_t i = 0; i < specs.size(); ++i) {
        add(specs[i].label(), static_cast<int>(i), false);
        add(specs[i].label(), static_cast<int>(i), true);
    }
    BenchRun run = run_protocol(ds, registry, method, configs, specs, options, "noise");
    run.ks = {k};
    run.ms = {m};
    run.noise.push_back("clean");
    for (const NoiseSpec& s : specs) run.noise.push_back(s.label());
    return run;
}

BenchRun run_regularity_sweep(const Dataset& ds, const MethodRegistry& registry, const std::string& method,
                              std::size_t k, const std::vector<double>& ms, const BenchOptions& options) {
    std::vector<Config> configs;
    for (double m : ms) {
        Config c;
        c.method.k = k;
        c.method.m = m;
        configs.push_back(c);
    }
    BenchRun run = run_protocol(ds, registry, method, configs, {}, options, "regularity");
    run.ks = {k};
    run.ms = ms;
    return run;
}

const std::vector<std::string>& row_columns() {
    static const std::vector<std::string> cols = [] {
        std::vector<std::string> c = report_columns();
        for (const char* extra : {"protocol", "noise", "prefilter", "m", "error", "language", "threads"})
            c.emplace_back(extra);
        return c;
    }();
    return cols;
}

const std::vector<std::string>& aggregate_columns() {
    static const std::vector<std::string> cols = [] {
        std::vector<std::string> c = {"method", "protocol", "noise",  "prefilter", "m",
                                      "k_requested", "k_generated", "images", "failures"};
        for (const char* metric : kMetricColumns) c.emplace_back(metric);
        for (const char* extra : {"vsn", "language", "threads"}) c.emplace_back(extra);
        return c;
    }();
    return cols;
}

std::string rows_csv(const BenchRun& run) {
    std::string out = csv_line(row_columns());
    for (const BenchRow& row : run.rows) {
        std::vector<std::string> cells = report_cells(row.report);
        if (!row.error.empty()) {
            // A failed row carries only its identifying cells.
            const std::vector<std::string>& cols = report_columns();
            for (std::size_t i = 0; i < cols.size(); ++i)
                if (cols[i] != "method" && cols[i] != "image" && cols[i] != "k_requested") cells[i].clear();
        }
        cells.push_back(run.protocol);
        cells.push_back(row.noise);
        cells.push_back(bool_cell(row.prefilter));
        cells.push_back(format_number(row.m));
        cells.push_back(row.error);
        cells.push_back(run.language);
        cells.push_back(std::to_string(run.threads));
        out += csv_line(cells);
    }
    return out;
}

std::string aggregate_csv(const BenchRun& run) {
    std::string out = csv_line(aggregate_columns());
    for (const AggregateRow& a : run.aggregates) {
        std::vector<std::string> cells = {run.method,
                                          run.protocol,
                                          a.noise,
                                          bool_cell(a.prefilter),
                                          format_number(a.m),
                                          std::to_string(a.k_requested),
                                          a.images ? format_number(a.k_generated) : "",
                                          std::to_string(a.images),
                                          std::to_string(a.failures)};
        for (const char* metric : kMetricColumns) {
            const auto it = a.means.find(metric);
            cells.push_back(it == a.means.end() ? "" : format_number(it->second));
        }
        cells.push_back(a.vsn ? format_number(*a.vsn) : "");
        cells.push_back(run.language);
        cells.push_back(std::to_string(run.threads));
        out += csv_line(cells);
    }
    return out;
}

ordered_json to_json(const BenchRun& run) {
    ordered_json j;
    j["protocol"] = run.protocol;
    j["method"] = run.method;
    j["language"] = run.language;
    j["threads"] = run.threads;
    j["ks"] = run.ks;
    j["ms"] = run.ms;
    j["noise"] = run.noise;
    j["rows"] = ordered_json::array();
    for (const BenchRow& row : run.rows) {
        ordered_json r = row.error.empty() ? to_json(row.report) : ordered_json::object();
        if (!row.error.empty()) {
            r["method"] = row.report.method;
            r["image"] = row.report.image;
            r["k_requested"] = row.report.k_requested;
            r["error"] = row.error;
        }
        r["noise"] = row.noise;
        r["prefilter"] = row.prefilter;
        r["m"] = row.m;
        j["rows"].push_back(std::move(r));
    }
    j["aggregate"] = ordered_json::array();
    for (const AggregateRow& a : run.aggregates) {
        ordered_json r;
        r["noise"] = a.noise;
        r["prefilter"] = a.prefilter;
        r["m"] = a.m;
        r["k_requested"] = a.k_requested;
        if (a.images) r["k_generated"] = a.k_generated;
        r["images"] = a.images;
        r["failures"] = a.failures;
        for (const char* metric : kMetricColumns) {
            const auto it = a.means.find(metric);
            if (it != a.means.end()) r[metric] = it->second;
        }
        if (a.vsn) r["vsn"] = *a.vsn;
        j["aggregate"].push_back(std::move(r));
    }
    return j;
}

void emit_report(const BenchRun& run, const fs::path& dir, ReportFormat format) {
    fs::create_directories(dir);
    auto write = [](const fs::path& path, const std::string& text) {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError("cannot write " + path.string());
        out << text;
        if (!out) throw IoError("write failed: " + path.string());
    };
    if (format == ReportFormat::csv) {
        write(dir / "rows.csv", rows_csv(run));
        write(dir / "aggregate.csv", aggregate_csv(run));
    } else {
        write(dir / "report.json", to_json(run).dump(2) + "\n");
    }
}

}  // namespace superpix
