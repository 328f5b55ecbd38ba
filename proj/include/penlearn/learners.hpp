#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "penlearn/data_model.hpp"
#include "penlearn/featurizer.hpp"
#include "penlearn/interval_loss.hpp"

namespace penlearn {

// Raised when a model is applied to the wrong kind of input (features vs.
// raw sequence).
class KindMismatch : public DataError {
 public:
  using DataError::DataError;
};

// ---------------------------------------------------------------------------
// Unsupervised baselines (raw penalty scale).

double bic_penalty(std::span<const double> values);

enum class AicFeature { Sd, Variance };
double aic_penalty(std::span<const double> values, AicFeature feature);

// ---------------------------------------------------------------------------
// Models. Every model produces a log-penalty; predict() exponentiates.

struct TrainConfig {
  double step_size = 1e-2;
  int max_iterations = 1000;
  double validation_fraction = 0.2;
  int patience = 50;
  std::uint64_t seed = 1;
  HingeConfig loss;
  std::size_t full_batch_points = 1'000'000;
  std::size_t batch_size = 32;
};

struct TrainMeta {
  bool trained = false;
  int iterations = 0;
  int best_iteration = 0;
  double best_validation_loss = 0.0;
  std::uint64_t seed = 0;
  // Best validation loss seen after each iteration (index 0 = initial model).
  std::vector<double> best_loss_curve;
};

struct ConstantModel {
  double log_lambda = 0.0;
};

// Selected columns of the 365-entry feature vector with their training
// mean/sd. Columns invalid anywhere in training or with zero variance are
// dropped.
struct FeatureScaling {
  std::vector<std::size_t> indices;
  std::vector<std::string> names;
  std::vector<double> mean;
  std::vector<double> sd;

  static FeatureScaling fit(std::span<const FeatureVector> features);
  // Standardised selected columns. An entry that is invalid for this
  // sequence is replaced by its training mean (0 after standardisation).
  std::vector<double> transform(const FeatureVector& fv) const;
};

// log lambda = x . weights + bias, weights over the selected columns in the
// original (unstandardised) feature space.
struct LinearModel {
  FeatureScaling scaling;
  std::vector<double> weights;
  double bias = 0.0;
  double l1 = 0.0;
  TrainMeta meta;
};

// Fully connected ReLU network on standardised features.
struct MlpModel {
  FeatureScaling scaling;
  std::vector<std::size_t> layer_sizes;  // input, hidden..., 1
  std::vector<double> params;            // per layer: W (out x in, row-major) then b (out)
  TrainMeta meta;

  std::size_t param_count() const;
};

enum class CellKind { Rnn, Lstm, Gru };
std::string to_string(CellKind kind);
CellKind parse_cell_kind(const std::string& name);

struct RecurrentArch {
  CellKind cell = CellKind::Gru;
  int layers = 1;  // 1 or 2
  int hidden = 4;  // m

  std::size_t gate_count() const;  // 1, 4 or 3 blocks of size m
  std::size_t param_count() const;
};

// Preprocessing recorded with a recurrent model and applied to raw
// sequences before the forward pass.
struct SequencePreprocessing {
  std::size_t pool_window = 1;
  PoolStat pool_stat = PoolStat::Mean;
  std::optional<NormalizationStats> normalization;

  std::vector<double> apply(std::span<const double> raw) const;
};

// Flat parameter layout, per layer l with input size k_l (1, then m):
//   rnn:  Wx[m x k], Wh[m x m], b[m]
//   lstm: Wx[4m x k], Wh[4m x m], b[4m]        gate blocks i, f, g, o
//   gru:  Wx[3m x k], Wh[3m x m], bx[3m], bh[3m] gate blocks r, z, n
// followed by the readout beta[m] and beta0.
struct RecurrentModel {
  RecurrentArch arch;
  std::vector<double> params;
  SequencePreprocessing preprocessing;
  TrainMeta meta;

  double readout_bias() const { return params.back(); }
};

using LearnerModel = std::variant<ConstantModel, LinearModel, MlpModel, RecurrentModel>;

std::string model_kind(const LearnerModel& model);
bool expects_features(const LearnerModel& model);

// ---------------------------------------------------------------------------
// Training.

// Minimises total hinge loss over the candidate set {lo, hi, (lo+hi)/2}
// drawn from finite target ends; ties go to the smallest candidate.
ConstantModel fit_constant(std::span<const TargetInterval> targets, const HingeConfig& cfg);

// Proximal gradient with momentum (FISTA) and backtracking on
// sum hinge + l1 * |weights|_1, bias unpenalised.
LinearModel fit_linear_fista(std::span<const FeatureVector> features,
                             std::span<const TargetInterval> targets, double l1,
                             const TrainConfig& cfg);

double soft_threshold(double x, double threshold);

// Smallest l1 at which every weight of fit_linear_fista is zero.
double linear_l1_max(std::span<const FeatureVector> features, std::span<const TargetInterval> targets,
                     const TrainConfig& cfg);

// Geometric grid 0.001 * 1.2^k up to and including the first value that
// removes every feature.
std::vector<double> linear_l1_grid(std::span<const FeatureVector> features,
                                   std::span<const TargetInterval> targets, const TrainConfig& cfg);

MlpModel fit_mlp(std::span<const FeatureVector> features, std::span<const TargetInterval> targets,
                 const std::vector<std::size_t>& hidden_sizes, const TrainConfig& cfg);

// Sequences must already be preprocessed; `preprocessing` is recorded on
// the model for later prediction from raw values.
RecurrentModel fit_recurrent(const std::vector<std::vector<double>>& sequences,
                             std::span<const TargetInterval> targets, const RecurrentArch& arch,
                             const TrainConfig& cfg, SequencePreprocessing preprocessing = {});

// Seeded uniform(-1/sqrt(m), 1/sqrt(m)) initialisation; readout bias set to
// `bias`.
RecurrentModel init_recurrent(const RecurrentArch& arch, std::uint64_t seed, double bias = 0.0);
MlpModel init_mlp(std::size_t inputs, const std::vector<std::size_t>& hidden_sizes, std::uint64_t seed,
                  double bias = 0.0);

// ---------------------------------------------------------------------------
// Forward passes and gradients.

struct RecurrentOutput {
  double log_lambda = 0.0;
  std::vector<double> last_hidden;  // h_N of the top layer
};

// Runs the stacked cells over preprocessed values from a zero state.
RecurrentOutput recurrent_forward(const RecurrentModel& model, std::span<const double> values);

// Hinge loss of one sequence; accumulates d loss / d params into `grad`
// (same layout as params) via backpropagation through time.
double recurrent_loss_grad(const RecurrentModel& model, std::span<const double> values,
                           const TargetInterval& target, const HingeConfig& cfg,
                           std::span<double> grad);

double mlp_forward(const MlpModel& model, std::span<const double> standardized);
double mlp_loss_grad(const MlpModel& model, std::span<const double> standardized,
                     const TargetInterval& target, const HingeConfig& cfg, std::span<double> grad);

// ---------------------------------------------------------------------------
// Prediction.

double predict_log(const LearnerModel& model, const FeatureVector& features);
double predict_log(const LearnerModel& model, std::span<const double> raw_values);
double predict(const LearnerModel& model, const FeatureVector& features);
double predict(const LearnerModel& model, std::span<const double> raw_values);

// ---------------------------------------------------------------------------
// Gradient verification.

enum class GradCheckKind { Mlp, Rnn, Lstm, Gru };
GradCheckKind parse_grad_check_kind(const std::string& name);

struct GradCheckReport {
  std::size_t trials = 0;
  std::size_t parameters_checked = 0;
  double max_relative_error = 0.0;
  double max_absolute_error = 0.0;
  bool passed = false;
};

// Per instance, ||a - n|| / max(||a||, ||n||, 1e-6) between the analytic
// gradient a and the central-difference (h = 1e-6) gradient n of the total
// hinge loss; the report keeps the maximum over instances.
GradCheckReport grad_check(GradCheckKind kind, std::size_t trials, double tolerance,
                           std::uint64_t seed = 1);

}  // namespace penlearn
