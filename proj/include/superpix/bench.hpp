#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "superpix/filter.hpp"
#include "superpix/metrics.hpp"
#include "superpix/noise.hpp"
#include "superpix/priorseg.hpp"
#include "superpix/synth.hpp"

namespace superpix {

struct DatasetEntry {
    std::string name;
    std::filesystem::path image;
    std::vector<std::filesystem::path> groundtruths;
    std::optional<std::filesystem::path> prior;     // priors/<name>/ when it holds a manifest
    std::optional<std::filesystem::path> external;  // external/<name>/ with precomputed label maps
};

struct Dataset {
    std::string name;
    std::filesystem::path root;
    std::vector<DatasetEntry> entries;  // sorted by name
};

/// Reads `images/<name>.png`, `groundtruth/<name>/gt_<j>.{csv,png}`, optional `priors/<name>/`
/// and `external/<name>/`. Without `allow_missing_groundtruth`, images lacking annotations are an
/// error that lists every offending image.
Dataset load_dataset(const std::filesystem::path& root, bool allow_missing_groundtruth = false);

struct SyntheticDatasetParams {
    std::size_t images = 4;
    std::size_t groundtruths = 1;  // identical copies per image
    bool priors = true;            // write groundtruth-derived object priors
    synth::SceneParams scene{};    // seed is advanced per image
};

/// Writes a dataset of random scenes in the layout read by load_dataset.
void write_synthetic_dataset(const std::filesystem::path& root, const SyntheticDatasetParams& params);

struct MethodConfig {
    std::size_t k = 100;
    double m = 10.0;
    int iterations = 10;
    std::optional<bool> prefilter;  // unset: the method's own default
    BilateralParams bilateral{};
};

struct MethodInput {
    const Image& image;
    const DatasetEntry& entry;
    const ObjectPrior* prior;  // loaded prior when the method needs one and the entry has it
    const MethodConfig& config;
};

struct Method {
    std::string id;
    bool timed = true;        // false for pass-through methods that read results from disk
    bool needs_prior = false;
    std::function<LabelMap(const MethodInput&)> run;
};

class MethodRegistry {
public:
    /// slic, maskslic-full, prior-pipeline, external-labelmaps.
    static MethodRegistry builtin();

    void add(Method method);
    const Method& get(const std::string& id) const;
    bool contains(const std::string& id) const { return methods_.count(id) != 0; }
    std::vector<std::string> ids() const;

private:
    std::map<std::string, Method> methods_;
};

struct BenchOptions {
    bool timing = true;       // false drops time_ms so reports are byte-reproducible
    std::size_t threads = 0;  // 0: hardware concurrency; SUPERPIX_THREADS caps either way
    ReportOptions metrics{};
};

/// Worker count after applying the SUPERPIX_THREADS cap.
std::size_t resolve_threads(std::size_t requested);

struct BenchRow {
    MetricReport report;
    double m = 0.0;
    std::string noise = "clean";
    bool prefilter = false;
    std::string error;  // non-empty when the row failed
};

struct AggregateRow {
    std::string noise = "clean";
    bool prefilter = false;
    double m = 0.0;
    std::size_t k_requested = 0;
    double k_generated = 0.0;  // mean over successful rows: the curve x-axis
    std::size_t images = 0;
    std::size_t failures = 0;
    std::map<std::string, double> means;  // metric column -> mean over rows where present
    std::optional<double> vsn;
};

struct BenchRun {
    std::string protocol;  // scale, noise or regularity
    std::string method;
    std::string language = "C++20";
    std::size_t threads = 1;
    std::vector<std::size_t> ks;
    std::vector<double> ms;
    std::vector<std::string> noise;
    std::vector<BenchRow> rows;  // sorted by image name, then configuration index
    std::vector<AggregateRow> aggregates;

    std::size_t failures() const;
};

BenchRun run_scale_sweep(const Dataset& ds, const MethodRegistry& registry, const std::string& method,
                         const std::vector<std::size_t>& ks, double m, const BenchOptions& options = {});

/// Configurations: clean raw, clean prefiltered, then raw and prefiltered per spec. Each noisy
/// image is drawn once per (entry, spec) and shared by both configurations.
BenchRun run_noise_experiment(const Dataset& ds, const MethodRegistry& registry, const std::string& method,
                              std::size_t k, const std::vector<NoiseSpec>& specs, double m = 10.0,
                              const BenchOptions& options = {});

BenchRun run_regularity_sweep(const Dataset& ds, const MethodRegistry& registry, const std::string& method,
                              std::size_t k, const std::vector<double>& ms, const BenchOptions& options = {});

enum class ReportFormat { csv, json };

const std::vector<std::string>& row_columns();
const std::vector<std::string>& aggregate_columns();
std::string rows_csv(const BenchRun& run);
std::string aggregate_csv(const BenchRun& run);
nlohmann::ordered_json to_json(const BenchRun& run);

/// csv: `rows.csv` and `aggregate.csv`; json: `report.json`. Creates `dir` when needed.
void emit_report(const BenchRun& run, const std::filesystem::path& dir, ReportFormat format);

}  // namespace superpix
