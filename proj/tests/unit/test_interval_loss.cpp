#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "penlearn/interval_loss.hpp"

using namespace penlearn;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

TEST_CASE("hinge loss hand values") {
  CHECK(hinge_loss(1.5, {1, 2}, {0.0, 1}) == 0.0);
  CHECK(hinge_loss(0.0, {1, 2}, {0.0, 2}) == 1.0);
  CHECK(hinge_loss(3.0, {1, 2}, {0.5, 1}) == 1.5);
  CHECK(hinge_loss(5.0, {-kInf, kInf}, {0.0, 2}) == 0.0);
  // Margin larger than half the width penalises both sides.
  CHECK(hinge_loss(1.5, {1, 2}, {1.0, 1}) == doctest::Approx(1.0));
}

TEST_CASE("hinge gradient hand values") {
  CHECK(hinge_grad(0.0, {1, 2}, {0.0, 2}) == -2.0);
  CHECK(hinge_grad(1.5, {1, 2}, {0.0, 1}) == 0.0);
  CHECK(hinge_grad(4.0, {1, 2}, {0.0, 1}) == 1.0);
  // Kink of the p = 1 loss: subgradient 0.
  CHECK(hinge_grad(2.0, {1, 2}, {0.0, 1}) == 0.0);
}

TEST_CASE("hinge gradient matches central differences") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int checked = 0;
  while (checked < 1000) {
    HingeConfig cfg{0.5 * u(rng), rng() % 2 == 0 ? 1 : 2};
    TargetInterval t{4.0 * u(rng) - 2.0, 0.0};
    t.hi = t.lo + 3.0 * u(rng);
    if (rng() % 5 == 0) t.lo = -kInf;
    if (rng() % 5 == 0) t.hi = kInf;
    const double pred = 10.0 * u(rng) - 5.0;
    if (std::abs(pred - (t.lo + cfg.margin)) < 1e-4 || std::abs(pred - (t.hi - cfg.margin)) < 1e-4) continue;
    const double h = 1e-6;
    const double fd = (hinge_loss(pred + h, t, cfg) - hinge_loss(pred - h, t, cfg)) / (2 * h);
    CHECK(std::abs(fd - hinge_grad(pred, t, cfg)) <= 1e-5);
    ++checked;
  }
}

TEST_CASE("config validation") {
  CHECK_THROWS((HingeConfig{-1.0, 2}.validate()));
  CHECK_THROWS((HingeConfig{0.0, 3}.validate()));
  CHECK_THROWS((AftConfig{AftDistribution::Normal, 0.0}.validate()));
}

TEST_CASE("aft logistic right-censored hand value") {
  const double want = -std::log(1.0 - std::exp(-1.0) / (1.0 + std::exp(-1.0)));
  CHECK(aft_nll(1.0, 0.0, kInf, {AftDistribution::Logistic, 1.0}) == doctest::Approx(want).epsilon(1e-14));
  CHECK(want == doctest::Approx(0.3133).epsilon(1e-4));
}

TEST_CASE("aft right-censored loss decreases with the prediction") {
  for (auto dist : {AftDistribution::Normal, AftDistribution::Logistic, AftDistribution::Extreme}) {
    double prev = kInf;
    for (double pred = -3.0; pred <= 6.0; pred += 0.5) {
      const double l = aft_nll(pred, 2.0, kInf, {dist, 1.0});
      CHECK(l <= prev);
      prev = l;
    }
  }
}

TEST_CASE("aft normal matches quadrature of the density") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const double sigma = 0.5 + 2.0 * u(rng), pred = 8.0 * u(rng);
    const double lower = std::max(0.0, pred + sigma * (6.0 * u(rng) - 3.0));
    const double upper = rng() % 3 == 0 ? kInf : lower + sigma * (0.1 + 2.0 * u(rng));
    auto density = [&](double y) {
      const double z = (y - pred) / sigma;
      return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * std::numbers::pi));
    };
    const double mass = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(density, lower, upper, 15, 1e-15);
    CHECK(std::abs(aft_nll(pred, lower, upper, {AftDistribution::Normal, sigma}) + std::log(mass)) <= 1e-8);
  }
}

TEST_CASE("aft distributions: cdf and survival are complementary") {
  for (auto dist : {AftDistribution::Normal, AftDistribution::Logistic, AftDistribution::Extreme})
    for (double z : {-5.0, -1.0, 0.0, 0.7, 3.0}) CHECK(aft_cdf(dist, z) + aft_survival(dist, z) == doctest::Approx(1.0));
}

TEST_CASE("aft edge cases") {
  const AftConfig cfg{AftDistribution::Normal, 1.0};
  CHECK_THROWS_AS(aft_nll(1.0, 2.0, 2.0, cfg), std::invalid_argument);
  CHECK_THROWS_AS(aft_nll(1.0, 3.0, 2.0, cfg), std::invalid_argument);
  CHECK_THROWS_AS(aft_nll(1.0, -1.0, 2.0, cfg), std::invalid_argument);
  // Far tail underflows to zero mass.
  CHECK(std::isinf(aft_nll(0.0, 100.0, 101.0, cfg)));
  // Upper tail kept precise where 1 - cdf would cancel.
  const double tail = aft_nll(0.0, 10.0, kInf, cfg);
  CHECK(std::isfinite(tail));
  CHECK(tail == doctest::Approx(-std::log(0.5 * std::erfc(10.0 / std::sqrt(2.0)))));
}

TEST_CASE("total loss") {
  const HingeConfig h{0.0, 2};
  std::vector<TargetInterval> t{{0, 1}, {2, 3}, {-kInf, 0}};
  CHECK(total_loss(std::vector<double>{0.5, 2.5, -1.0}, t, h) == 0.0);
  CHECK(total_loss(std::vector<double>{4.0}, std::vector<TargetInterval>{{2, 3}}, h) == hinge_loss(4.0, {2, 3}, h));

  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::vector<double> preds(50);
  std::vector<TargetInterval> ts(50);
  for (std::size_t i = 0; i < 50; ++i) {
    preds[i] = u(rng);
    ts[i] = {u(rng) - 1.0, 0.0};
    ts[i].hi = ts[i].lo + 1.5;
  }
  const double all = total_loss(preds, ts, h);
  // Two halves summed separately, reversed order.
  double parts = 0.0;
  for (std::size_t i = 50; i-- > 0;) parts += hinge_loss(preds[i], ts[i], h);
  CHECK(std::abs(all - parts) <= 1e-12 * std::max(1.0, all));
  CHECK_THROWS(total_loss(std::vector<double>{1.0}, ts, h));

  // AFT: log-scale targets are mapped through exp.
  const AftConfig a{AftDistribution::Logistic, 1.0};
  CHECK(total_loss(std::vector<double>{1.0}, std::vector<TargetInterval>{{-kInf, kInf}}, a) ==
        doctest::Approx(aft_nll(1.0, 0.0, kInf, a)));
}
