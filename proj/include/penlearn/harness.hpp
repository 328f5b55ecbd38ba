#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "penlearn/data_model.hpp"
#include "penlearn/featurizer.hpp"
#include "penlearn/interval_loss.hpp"
#include "penlearn/learners.hpp"

namespace penlearn {

enum class ModelFamily { Constant, Bic, AicSd, AicVariance, Linear, Mlp, Rnn, Lstm, Gru };

std::string to_string(ModelFamily family);
ModelFamily parse_model_family(const std::string& name);
bool is_recurrent(ModelFamily family);

// One grid point. Only the fields relevant to the family are used.
struct Hyperparams {
  double l1 = 0.0;
  std::vector<std::size_t> mlp_hidden;
  RecurrentArch arch;
  std::size_t pool_window = 1;
  PoolStat pool_stat = PoolStat::Mean;

  std::string describe(ModelFamily family) const;
};

struct ExperimentConfig {
  std::string dataset = "dataset";
  std::filesystem::path sequences;
  std::filesystem::path labels;
  std::optional<std::filesystem::path> folds;
  int n_folds = 4;
  std::uint64_t seed = 1;
  std::vector<ModelFamily> models{ModelFamily::Constant, ModelFamily::Linear, ModelFamily::Gru};

  std::vector<double> l1_grid;  // empty: 0.001 * 1.2^k until no features remain
  std::vector<std::vector<std::size_t>> mlp_hidden{{8}, {16}, {8, 8}};
  std::vector<int> recurrent_layers{1, 2};
  std::vector<int> recurrent_hidden{2, 4, 8, 16};
  std::vector<std::size_t> pool_windows{1};
  std::vector<PoolStat> pool_stats{PoolStat::Mean};
  bool log1p = true;

  int inner_folds = 3;
  TrainConfig train;
  std::filesystem::path output_dir = "results";
  int threads = 1;
  bool plot = false;
  bool record_timing = false;

  // Parses the key = value format documented in the README; relative paths
  // resolve against the config file's directory.
  static ExperimentConfig parse(const std::filesystem::path& path);
  static ExperimentConfig parse_text(const std::string& text, const std::filesystem::path& base_dir);

  std::vector<Hyperparams> grid(ModelFamily family) const;
};

struct ResultRow {
  std::string dataset;
  int fold = 0;
  std::string model;
  std::string hyperparams;
  double accuracy = 0.0;  // NaN when the cell failed
  ErrorCount counts;
  double seconds = 0.0;
  std::string error;
};

struct SummaryRow {
  std::string dataset;
  std::string model;
  double mean_accuracy = 0.0;
  double sd_accuracy = 0.0;  // sample sd over folds, 0 for a single fold
  int folds = 0;
};

struct PredictionRow {
  int fold = 0;
  std::string model;
  std::string sequence_id;
  double log_lambda = 0.0;
};

struct ExperimentResult {
  std::vector<ResultRow> rows;
  std::vector<SummaryRow> summary;
  std::vector<PredictionRow> predictions;
  std::vector<std::string> log;
};

// Called with (outer fold, stage, ids) for every train-only stage:
// "targets", "normalization", "selection", "fit". Lets callers verify that
// test ids never reach them.
using AuditHook = std::function<void(int, const std::string&, const std::vector<std::string>&)>;

struct TrainingView {
  const Dataset* data = nullptr;  // sequences + targets
  std::vector<std::string> ids;   // ids with targets
};

// Mean inner-validation hinge loss of each grid point; returns the index of
// the first minimum.
struct CvResult {
  std::size_t best = 0;
  std::vector<double> scores;
};

CvResult cross_validate(const Dataset& train, ModelFamily family, const std::vector<Hyperparams>& grid,
                        int inner_folds, std::uint64_t seed, const ExperimentConfig& cfg,
                        const AuditHook& audit = {}, int outer_fold = 0);

// Fits `family` with hyperparameters `hp` on the ids of `train` that have
// targets. Unsupervised families return nullopt.
std::optional<LearnerModel> fit_family(ModelFamily family, const Hyperparams& hp, const Dataset& train,
                                       const std::vector<std::string>& ids, const ExperimentConfig& cfg,
                                       const AuditHook& audit = {}, int outer_fold = 0);

// Log-penalty for one raw sequence.
double predict_family_log(ModelFamily family, const std::optional<LearnerModel>& model,
                          std::span<const double> raw_values);

constexpr double kLogLambdaClip = 20.0;

ExperimentResult run_experiment(const ExperimentConfig& cfg, const AuditHook& audit = {});
ExperimentResult run_experiment(const ExperimentConfig& cfg, const Dataset& dataset,
                                const FoldAssignment& folds, const AuditHook& audit = {});

std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows);

// results.csv, summary.csv, predictions.csv, experiment.log and, with
// cfg.plot, accuracy_long.csv.
void write_experiment(const ExperimentConfig& cfg, const ExperimentResult& result);

// Runs `count` jobs over `threads` workers; job i always writes slot i so
// results do not depend on scheduling.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& job);

}  // namespace penlearn
