#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "audformer/features.hpp"

namespace audformer {

enum class Label : int { Negative = 0, Positive = 1 };

const char* label_name(Label l);
Label label_from_name(const std::string& name);

// One subject line of a JSON-lines manifest. Modality order is preserved
// as declared; audio paths are resolved relative to the manifest file.
struct ManifestEntry {
    std::string subject_id;
    Label label = Label::Negative;
    std::vector<std::pair<std::string, std::vector<std::filesystem::path>>> modality_paths;
};

struct Manifest {
    std::vector<ManifestEntry> entries;
    std::vector<std::string> modality_names;  // declared order (first entry)
};

// Validates structure, label vocabulary, subject uniqueness, modality
// consistency and audio file existence (missing files are collected and
// reported together).
Manifest load_manifest(const std::filesystem::path& path);

// Target clip length per modality, seconds.
struct ClipProfile {
    std::vector<std::pair<std::string, double>> seconds;
    double default_seconds = 8.0;

    double of(const std::string& modality) const {
        for (const auto& [name, sec] : seconds)
            if (name == modality) return sec;
        return default_seconds;
    }
};

// A fully assembled subject: extracted features per modality, plus SMOTE
// provenance when synthetic.
struct Instance {
    std::string subject_id;
    Label label = Label::Negative;
    std::vector<std::pair<std::string, ModalityFeatureSet>> features;

    bool synthetic = false;
    std::string parent_id;
    std::string neighbor_id;
    double interp_u = 0.0;

    const ModalityFeatureSet& of(const std::string& modality) const;
};

// Per subject and modality: decode recordings in manifest order,
// concatenate, trim silence, standardize to the profile length, extract
// all seven domains. Decode failures are aggregated with subject context.
std::vector<Instance> assemble(const Manifest& manifest, const FeatureConfig& cfg,
                               const ClipProfile& clips);

// Flattens one instance's features into a single vector (fixed modality
// and domain order). Used by SMOTE and exposed for tests.
std::vector<float> flatten_features(const Instance& inst);

// Synthetic minority oversampling: balances class counts by interpolating
// between minority instances and their k nearest minority neighbours
// (Euclidean over per-domain z-normalized flattened features). Synthetic
// instances carry fresh ids, a marker flag and their interpolation record.
std::vector<Instance> smote(const std::vector<Instance>& instances,
                            std::size_t k_neighbors, std::uint64_t seed);

// Subject-level k-fold partition. Real subjects are dealt round-robin
// after a seeded shuffle; synthetic instances inherit their parent's fold
// and are excluded from every test set.
struct FoldPlan {
    std::size_t k = 0;
    std::unordered_map<std::string, std::size_t> assignments;

    std::size_t fold_of(const std::string& subject_id) const;
};

FoldPlan make_folds(const std::vector<Instance>& instances, std::size_t k,
                    std::uint64_t seed);

// Indices of instances usable for training when `fold` is held out
// (everything assigned elsewhere, synthetic included).
std::vector<std::size_t> train_indices(const FoldPlan& plan,
                                       const std::vector<Instance>& instances,
                                       std::size_t fold);

// Indices of evaluation instances for `fold`: real instances only.
std::vector<std::size_t> test_indices(const FoldPlan& plan,
                                      const std::vector<Instance>& instances,
                                      std::size_t fold);

// Five evaluation metrics of one fold. AUC/SEN/SPE are undefined (not 0)
// when a class is absent; AUC uses midrank tie handling.
struct MetricValues {
    double acc = 0.0;
    double f1 = 0.0;
    std::optional<double> auc;
    std::optional<double> sen;
    std::optional<double> spe;
};

MetricValues compute_metrics(const std::vector<int>& labels,
                             const std::vector<double>& scores,
                             double threshold = 0.5);

struct MetricReport {
    std::vector<MetricValues> per_fold;
    MetricValues mean;
    MetricValues stddev;  // population std over folds
};

MetricReport aggregate_metrics(const std::vector<MetricValues>& folds);

// Aligned-column text table (one row per metric, mean +/- std, folds).
std::string report_table(const MetricReport& report);

// JSON report: per-fold values plus mean/std per metric.
std::string report_json(const MetricReport& report);

}  // namespace audformer
