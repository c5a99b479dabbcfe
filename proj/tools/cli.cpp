#include "cli.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>

#include "superpix/bench.hpp"
#include "superpix/format.hpp"
#include "superpix/io.hpp"
#include "superpix/metrics.hpp"
#include "superpix/priorseg.hpp"
#include "superpix/slic.hpp"

namespace superpix::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void add_bilateral(CLI::App* cmd, BilateralParams& b) {
    cmd->add_option("--radius", b.radius, "bilateral window radius in pixels (window is 2r+1)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--sigma-s", b.sigma_s, "bilateral spatial sigma in pixels")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--sigma-r", b.sigma_r, "bilateral range sigma in 8-bit intensity units")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
}

struct SegmentArgs {
    std::string image, mask, out;
    SlicParams slic;
    std::optional<std::size_t> min_size;
};

struct PipelineArgs {
    std::string image, prior, out, stats;
    PipelineParams params;
    std::optional<std::size_t> min_area;
    bool no_prefilter = false;
};

struct EvalArgs {
    std::string seg, image, csv, method = "external";
    std::vector<std::string> gts;
    std::optional<std::size_t> k_requested;
    double epsilon = 2.0;
};

struct BenchArgs {
    std::string root, out, protocol = "scale", method = "slic", format = "csv";
    std::vector<std::size_t> ks = {50, 100, 200, 300, 400, 600, 800, 1000};
    std::vector<double> ms = {1, 5, 10, 20, 40};
    std::vector<std::string> noise = {"gaussian:20"};
    std::size_t k = 100;
    double m = 10.0;
    int iterations = 10;
    std::uint64_t seed = 0;
    std::size_t threads = 0;
    bool no_timing = false;
    bool no_gt = false;
    double epsilon = 2.0;
};

struct SynthArgs {
    std::string out;
    SyntheticDatasetParams params;
    bool no_priors = false;
};

int cmd_segment(const SegmentArgs& a, std::ostream& out) {
    const Image img = load_image(a.image);
    SlicParams p = a.slic;
    p.min_size = a.min_size;
    std::optional<BinaryMask> mask;
    if (!a.mask.empty()) {
        mask = load_mask(a.mask);
        require_same_shape(img, *mask, "segment --mask");
    }
    const auto start = std::chrono::steady_clock::now();
    const LabelMap labels = mask ? run_mask_slic(img, *mask, p) : run_slic(img, p);
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    save_label_map(labels, a.out);
    ordered_json j;
    j["k_generated"] = labels.count_labels();
    j["time_ms"] = ms;
    out << j.dump() << "\n";
    return 0;
}

int cmd_pipeline(const PipelineArgs& a, std::ostream& out, std::ostream& err) {
    const Image img = load_image(a.image);
    ObjectPrior prior;
    if (!a.prior.empty()) {
        try {
            prior = load_object_prior(a.prior);
        } catch (const Error& e) {
            err << "pipeline failed in stage load: " << e.what() << "\n";
            return 1;
        }
    }
    PipelineParams p = a.params;
    p.min_area = a.min_area;
    p.prefilter = !a.no_prefilter;
    PipelineResult res;
    try {
        res = run_pipeline(img, prior, p);
    } catch (const StageError& e) {
        err << "pipeline failed in stage " << e.stage() << ": " << e.what() << "\n";
        return 1;
    }
    save_label_map(res.labels, a.out);
    const ordered_json stats = to_json(res.stats);
    if (!a.stats.empty()) {
        std::ofstream s(a.stats);
        if (!s) throw IoError("cannot write " + a.stats);
        s << stats.dump(2) << "\n";
    }
    out << stats.dump() << "\n";
    return 0;
}

int cmd_eval(const EvalArgs& a, std::ostream& out) {
    const LabelMap seg = load_label_map(a.seg);
    std::vector<LabelMap> gts;
    for (const std::string& g : a.gts) gts.push_back(load_label_map(g));
    std::optional<Image> img;
    if (!a.image.empty()) img = load_image(a.image);
    ReportOptions opts;
    opts.epsilon = a.epsilon;
    MetricReport r = full_report(seg, gts, img ? &*img : nullptr, a.k_requested.value_or(0), std::nullopt, opts);
    r.method = a.method;
    r.image = fs::path(a.seg).stem().string();
    if (!a.csv.empty()) {
        std::ofstream csv(a.csv);
        if (!csv) throw IoError("cannot write " + a.csv);
        const auto& cols = report_columns();
        const auto cells = report_cells(r);
        for (std::size_t i = 0; i < cols.size(); ++i) csv << (i ? "," : "") << cols[i];
        csv << "\n";
        for (std::size_t i = 0; i < cells.size(); ++i) csv << (i ? "," : "") << cells[i];
        csv << "\n";
    }
    out << to_json(r).dump() << "\n";
    return 0;
}

void print_summary(const BenchRun& run, std::ostream& out) {
    for (const AggregateRow& a : run.aggregates) {
        out << run.protocol << " noise=" << a.noise << " prefilter=" << (a.prefilter ? "on" : "off")
            << " m=" << format_number(a.m) << " k_requested=" << a.k_requested
            << " k_generated=" << format_number(a.k_generated) << " images=" << a.images;
        for (const char* key : {"asa", "br", "precision", "cd", "gr", "ev", "time_ms"}) {
            const auto it = a.means.find(key);
            if (it != a.means.end()) out << " " << key << "=" << format_number(it->second);
        }
        out << "\n";
    }
}

int cmd_bench(const BenchArgs& a, std::ostream& out, std::ostream& err) {
    std::vector<NoiseSpec> specs;
    if (a.protocol == "noise") {
        try {
            for (const std::string& s : a.noise) specs.push_back(parse_noise_spec(s, a.seed));
        } catch (const InvalidArgument& e) {
            throw UsageError(std::string("--noise: ") + e.what());
        }
    }
    const Dataset ds = load_dataset(a.root, a.no_gt);
    const MethodRegistry registry = MethodRegistry::builtin();
    if (!registry.contains(a.method)) throw UsageError("--method: unknown method " + a.method);
    BenchOptions opts;
    opts.timing = !a.no_timing;
    opts.threads = a.threads;
    opts.metrics.epsilon = a.epsilon;

    BenchRun run;
    if (a.protocol == "scale") {
        run = run_scale_sweep(ds, registry, a.method, a.ks, a.m, opts);
    } else if (a.protocol == "noise") {
        run = run_noise_experiment(ds, registry, a.method, a.k, specs, a.m, opts);
    } else {
        run = run_regularity_sweep(ds, registry, a.method, a.k, a.ms, opts);
    }
    if (a.format == "csv" || a.format == "both") emit_report(run, a.out, ReportFormat::csv);
    if (a.format == "json" || a.format == "both") emit_report(run, a.out, ReportFormat::json);
    print_summary(run, out);
    for (const BenchRow& row : run.rows)
        if (!row.error.empty()) err << "row failed: " << row.report.image << " k=" << row.report.k_requested << ": "
                                    << row.error << "\n";
    return (!run.rows.empty() && run.failures() == run.rows.size()) ? 1 : 0;
}

int cmd_synth(const SynthArgs& a, std::ostream& out) {
    SyntheticDatasetParams p = a.params;
    p.priors = !a.no_priors;
    write_synthetic_dataset(a.out, p);
    ordered_json j;
    j["images"] = p.images;
    j["root"] = a.out;
    out << j.dump() << "\n";
    return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Superpixel segmentation and evaluation toolkit", "superpix"};
    app.require_subcommand(1);

    SegmentArgs seg;
    auto* segment = app.add_subcommand("segment", "SLIC or maskSLIC segmentation of one image");
    segment->add_option("image", seg.image, "input image (PNG or PPM)")->required()->check(CLI::ExistingFile);
    segment->add_option("--k", seg.slic.k, "requested superpixel count")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    segment->add_option("--m", seg.slic.m, "regularity weight (dimensionless)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    segment->add_option("--iters", seg.slic.iterations, "k-means iterations")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    segment->add_flag("--prefilter", seg.slic.prefilter, "apply the bilateral pre-filter");
    add_bilateral(segment, seg.slic.bilateral);
    segment->add_option("--min-size", seg.min_size, "smallest component kept, in pixels (default: |I|/k/4)")
        ->check(CLI::PositiveNumber);
    segment->add_option("--mask", seg.mask, "binary mask PNG; labels only inside it")->check(CLI::ExistingFile);
    segment->add_option("--out", seg.out, "output label map (.csv or .png)")->required();

    PipelineArgs pipe;
    auto* pipeline = app.add_subcommand("pipeline", "object prior to superpixels");
    pipeline->add_option("image", pipe.image, "input image")->required()->check(CLI::ExistingFile);
    pipeline->add_option("--prior", pipe.prior, "object prior directory (manifest.json + mask_NNN.png)");
    pipeline->add_option("--k", pipe.params.k, "requested superpixel count")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    pipeline->add_option("--m", pipe.params.m, "regularity weight (dimensionless)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    pipeline->add_option("--iters", pipe.params.iterations, "k-means iterations")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    pipeline->add_option("--min-area", pipe.min_area, "minimum region area in pixels (default: max(64, |I|/k/2))")
        ->check(CLI::PositiveNumber);
    pipeline->add_option("--opening", pipe.params.opening_radius, "opening radius in pixels")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    pipeline->add_flag("--no-prefilter", pipe.no_prefilter, "skip the bilateral pre-filter");
    add_bilateral(pipeline, pipe.params.bilateral);
    pipeline->add_option("--out", pipe.out, "output label map (.csv or .png)")->required();
    pipeline->add_option("--stats", pipe.stats, "write stage statistics JSON here");

    EvalArgs ev;
    auto* eval = app.add_subcommand("eval", "evaluate a label map");
    eval->add_option("seg", ev.seg, "superpixel label map (.csv or .png)")->required()->check(CLI::ExistingFile);
    eval->add_option("--gt", ev.gts, "groundtruth label maps; metrics are averaged")->check(CLI::ExistingFile);
    eval->add_option("--image", ev.image, "image for colour metrics (EV, ICV)")->check(CLI::ExistingFile);
    eval->add_option("--k-requested", ev.k_requested, "requested superpixel count; enables VSN");
    eval->add_option("--method", ev.method, "method name written to the report")->capture_default_str();
    eval->add_option("--epsilon", ev.epsilon, "boundary tolerance in pixels")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    eval->add_option("--csv", ev.csv, "also write a one-row CSV here");

    BenchArgs b;
    auto* bench = app.add_subcommand("bench", "benchmark protocols over a dataset");
    bench->add_option("root", b.root, "dataset root (images/, groundtruth/, priors/, external/)")
        ->required()
        ->check(CLI::ExistingDirectory);
    bench->add_option("--protocol", b.protocol, "scale, noise or regularity")
        ->check(CLI::IsMember({"scale", "noise", "regularity"}))
        ->capture_default_str();
    bench->add_option("--method", b.method, "slic, maskslic-full, prior-pipeline or external-labelmaps")
        ->capture_default_str();
    bench->add_option("--ks", b.ks, "scale protocol: requested counts")
        ->check(CLI::PositiveNumber)
        ->delimiter(',')
        ->capture_default_str();
    bench->add_option("--ms", b.ms, "regularity protocol: m values")
        ->check(CLI::PositiveNumber)
        ->delimiter(',')
        ->capture_default_str();
    bench->add_option("--k", b.k, "noise and regularity protocols: requested count")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    bench->add_option("--m", b.m, "scale and noise protocols: regularity weight")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    bench->add_option("--noise", b.noise, "noise specs: gaussian:<variance>, gaussian-sigma:<sigma>, sp:<density>")
        ->delimiter(',')
        ->capture_default_str();
    bench->add_option("--seed", b.seed, "noise seed")->capture_default_str();
    bench->add_option("--threads", b.threads, "worker threads (0: all cores; SUPERPIX_THREADS caps)")
        ->capture_default_str();
    bench->add_option("--format", b.format, "csv, json or both")
        ->check(CLI::IsMember({"csv", "json", "both"}))
        ->capture_default_str();
    bench->add_option("--epsilon", b.epsilon, "boundary tolerance in pixels")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    bench->add_flag("--no-timing", b.no_timing, "omit wall-clock times for byte-reproducible reports");
    bench->add_flag("--no-gt", b.no_gt, "accept images without groundtruth");
    bench->add_option("--out", b.out, "report directory")->required();

    SynthArgs sy;
    auto* synth = app.add_subcommand("synth", "write a synthetic dataset");
    synth->add_option("--out", sy.out, "dataset root")->required();
    synth->add_option("--images", sy.params.images, "number of images")->capture_default_str();
    synth->add_option("--width", sy.params.scene.width, "image width in pixels")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    synth->add_option("--height", sy.params.scene.height, "image height in pixels")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    synth->add_option("--regions", sy.params.scene.regions, "Voronoi regions per image")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    synth->add_option("--min-region", sy.params.scene.min_region, "smallest region in pixels")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    synth->add_option("--texture", sy.params.scene.texture, "texture amplitude in 8-bit units")
        ->capture_default_str();
    synth->add_option("--noise-sigma", sy.params.scene.noise_sigma, "i.i.d. noise sigma in 8-bit units")
        ->capture_default_str();
    synth->add_option("--contrast", sy.params.scene.contrast, "colour spread around mid-grey (0..1)")
        ->capture_default_str();
    synth->add_option("--seed", sy.params.scene.seed, "seed of the first image")->capture_default_str();
    synth->add_option("--gts", sy.params.groundtruths, "groundtruth copies per image")->capture_default_str();
    synth->add_flag("--no-priors", sy.no_priors, "skip groundtruth-derived object priors");

    std::vector<std::string> argv_store = {"superpix"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const std::string& s : argv_store) argv.push_back(s.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n";
        err << "run with --help for usage\n";
        return 2;
    }

    try {
        if (segment->parsed()) return cmd_segment(seg, out);
        if (pipeline->parsed()) return cmd_pipeline(pipe, out, err);
        if (eval->parsed()) return cmd_eval(ev, out);
        if (bench->parsed()) return cmd_bench(b, out, err);
        if (synth->parsed()) return cmd_synth(sy, out);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

}  // namespace superpix::cli
