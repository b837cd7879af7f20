#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "audformer/model.hpp"

namespace audformer {

struct TrainLogEntry {
    std::size_t epoch = 0;
    double mean_loss = 0.0;
};

struct TrainedModel {
    Model<float> model;
    std::vector<TrainLogEntry> loss_log;
    std::string rng_state;
};

// Plain SGD over shuffled mini-batches of the mean BCE objective. The
// final partial batch is used; the final-epoch parameters are returned
// (no early stopping). Aborts with NumericError if the loss goes NaN.
// forbidden_ids, when given, asserts no held-out instance leaks into a
// training batch.
TrainedModel train(const ModelConfig& cfg, const std::vector<Instance>& train_set,
                   const std::set<std::string>* forbidden_ids = nullptr);

struct EvalResult {
    MetricValues metrics;
    std::vector<std::string> subject_ids;
    std::vector<int> labels;
    std::vector<double> scores;  // positive-class probability
};

// Eval-mode forward over every instance, metrics via compute_metrics.
EvalResult evaluate(const Model<float>& model, const std::vector<Instance>& test_set);

struct CvResult {
    MetricReport report;
    FoldPlan plan;
    std::vector<std::vector<TrainLogEntry>> loss_logs;  // per fold
};

// Subject-disjoint k-fold cross-validation. SMOTE (when enabled in the
// config) is applied to each fold's training split only. Folds train in
// parallel up to `threads`, each on an RNG stream derived from seed+fold;
// results are aggregated in fold order. When out_dir is non-empty, per-
// fold checkpoints and loss logs are written beneath it.
CvResult run_cv(const ModelConfig& cfg, const std::vector<Instance>& instances,
                std::size_t k, std::size_t threads = 1,
                const std::filesystem::path& out_dir = {});

// Checkpoint: directory of AUDT parameter tensors plus a manifest with
// the serialized config, epoch, RNG state and normalizer statistics.
// Reloading reproduces eval-mode outputs bitwise.
void save_checkpoint(const std::filesystem::path& dir, const Model<float>& model,
                     std::size_t epoch, const std::string& rng_state);

struct Checkpoint {
    Model<float> model;
    std::size_t epoch = 0;
    std::string rng_state;
};

Checkpoint load_checkpoint(const std::filesystem::path& dir);

void write_loss_log(const std::filesystem::path& path,
                    const std::vector<TrainLogEntry>& log);

}  // namespace audformer
