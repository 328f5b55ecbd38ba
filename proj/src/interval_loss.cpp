#include "penlearn/interval_loss.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace penlearn {

void HingeConfig::validate() const {
  if (!(margin >= 0.0) || !std::isfinite(margin)) throw std::invalid_argument("hinge margin must be >= 0");
  if (power != 1 && power != 2) throw std::invalid_argument("hinge power must be 1 or 2");
}

void AftConfig::validate() const {
  if (!(scale > 0.0) || !std::isfinite(scale)) throw std::invalid_argument("AFT scale must be > 0");
}

double hinge_loss(double pred, const TargetInterval& target, const HingeConfig& cfg) {
  const double below = target.lo - pred + cfg.margin;
  const double above = pred - target.hi + cfg.margin;
  double loss = 0.0;
  if (below > 0.0) loss += cfg.power == 1 ? below : below * below;
  if (above > 0.0) loss += cfg.power == 1 ? above : above * above;
  return loss;
}

double hinge_grad(double pred, const TargetInterval& target, const HingeConfig& cfg) {
  const double below = target.lo - pred + cfg.margin;
  const double above = pred - target.hi + cfg.margin;
  double g = 0.0;
  if (below > 0.0) g -= cfg.power == 1 ? 1.0 : 2.0 * below;
  if (above > 0.0) g += cfg.power == 1 ? 1.0 : 2.0 * above;
  return g;
}

double aft_cdf(AftDistribution dist, double z) {
  switch (dist) {
    case AftDistribution::Normal:
      return 0.5 * std::erfc(-z / std::sqrt(2.0));
    case AftDistribution::Logistic:
      return 1.0 / (1.0 + std::exp(-z));
    case AftDistribution::Extreme:
      return -std::expm1(-std::exp(z));
  }
  return 0.0;
}

double aft_survival(AftDistribution dist, double z) {
  switch (dist) {
    case AftDistribution::Normal:
      return 0.5 * std::erfc(z / std::sqrt(2.0));
    case AftDistribution::Logistic:
      return 1.0 / (1.0 + std::exp(z));
    case AftDistribution::Extreme:
      return std::exp(-std::exp(z));
  }
  return 0.0;
}

double aft_nll(double pred, double lower, double upper, const AftConfig& cfg) {
  cfg.validate();
  if (!(lower >= 0.0) || std::isnan(upper) || !(lower <= upper))
    throw std::invalid_argument("AFT target must satisfy 0 <= lower <= upper");
  if (lower == upper) throw std::invalid_argument("AFT likelihood is undefined for a point target");
  const double zl = (lower - pred) / cfg.scale;
  const double zu = std::isinf(upper) ? std::numeric_limits<double>::infinity() : (upper - pred) / cfg.scale;
  // Use whichever tail keeps the difference away from cancellation.
  double mass;
  if (zl > 0.0)
    mass = aft_survival(cfg.distribution, zl) - (std::isinf(zu) ? 0.0 : aft_survival(cfg.distribution, zu));
  else
    mass = (std::isinf(zu) ? 1.0 : aft_cdf(cfg.distribution, zu)) - aft_cdf(cfg.distribution, zl);
  if (!(mass > 0.0)) return std::numeric_limits<double>::infinity();
  return std::max(0.0, -std::log(mass));
}

double total_loss(std::span<const double> preds, std::span<const TargetInterval> targets,
                  const LossConfig& cfg) {
  if (preds.size() != targets.size())
    throw std::invalid_argument("prediction and target counts differ");
  double sum = 0.0;
  if (const auto* h = std::get_if<HingeConfig>(&cfg)) {
    h->validate();
    for (std::size_t i = 0; i < preds.size(); ++i) sum += hinge_loss(preds[i], targets[i], *h);
  } else {
    const auto& a = std::get<AftConfig>(cfg);
    for (std::size_t i = 0; i < preds.size(); ++i)
      sum += aft_nll(preds[i], std::exp(targets[i].lo), std::exp(targets[i].hi), a);
  }
  return sum;
}

}  // namespace penlearn
