#pragma once

#include <span>
#include <variant>

#include "penlearn/data_model.hpp"

namespace penlearn {

struct HingeConfig {
  double margin = 0.0;  // epsilon >= 0
  int power = 2;        // 1 or 2

  void validate() const;
};

enum class AftDistribution { Normal, Logistic, Extreme };

struct AftConfig {
  AftDistribution distribution = AftDistribution::Normal;
  double scale = 1.0;  // sigma > 0

  void validate() const;
};

// ReLU(lo - pred + eps)^p + ReLU(pred - hi + eps)^p, on the log-penalty scale.
double hinge_loss(double pred, const TargetInterval& target, const HingeConfig& cfg);

// d/d pred of hinge_loss. For p = 1 the kink points return 0.
double hinge_grad(double pred, const TargetInterval& target, const HingeConfig& cfg);

// Distribution function F_Z and its complement.
double aft_cdf(AftDistribution dist, double z);
double aft_survival(AftDistribution dist, double z);

// -log[F((upper - pred)/sigma) - F((lower - pred)/sigma)] on the raw
// penalty scale, 0 <= lower < upper <= inf. Returns +inf when the
// probability mass underflows to zero.
double aft_nll(double pred, double lower, double upper, const AftConfig& cfg);

using LossConfig = std::variant<HingeConfig, AftConfig>;

// Sum of per-instance losses. Targets are always log-scale intervals; with
// an AFT config predictions are raw-scale penalties and targets are mapped
// through exp.
double total_loss(std::span<const double> preds, std::span<const TargetInterval> targets,
                  const LossConfig& cfg);

}  // namespace penlearn
