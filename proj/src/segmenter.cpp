#include "penlearn/segmenter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace penlearn {

CumulativeStats::CumulativeStats(std::span<const double> values)
    : sum_(values.size() + 1, 0.0), sum_sq_(values.size() + 1, 0.0) {
  if (!values.empty()) shift_ = std::accumulate(values.begin(), values.end(), 0.0) / values.size();
  for (std::size_t t = 0; t < values.size(); ++t) {
    const double x = values[t] - shift_;
    sum_[t + 1] = sum_[t] + x;
    sum_sq_[t + 1] = sum_sq_[t] + x * x;
  }
}

double CumulativeStats::segment_cost(std::size_t i, std::size_t j) const {
  if (i >= j || j > size())
    throw std::invalid_argument("segment_cost requires 0 <= i < j <= N, got i=" +
                                std::to_string(i) + " j=" + std::to_string(j));
  if (j - i == 1) return 0.0;
  const double s = sum_[j] - sum_[i];
  const double c = (sum_sq_[j] - sum_sq_[i]) - s * s / static_cast<double>(j - i);
  return c > 0.0 ? c : 0.0;
}

double CumulativeStats::segment_mean(std::size_t i, std::size_t j) const {
  return (sum_[j] - sum_[i]) / static_cast<double>(j - i) + shift_;
}

Segmentation make_segmentation(const CumulativeStats& stats, std::vector<std::size_t> changepoints,
                               double lambda) {
  Segmentation seg;
  seg.changepoints = std::move(changepoints);
  std::size_t prev = 0;
  auto add = [&](std::size_t end) {
    seg.data_cost += stats.segment_cost(prev, end);
    seg.means.push_back(stats.segment_mean(prev, end));
    prev = end;
  };
  for (auto t : seg.changepoints) add(t);
  add(stats.size());
  seg.penalized_cost = seg.data_cost + lambda * static_cast<double>(seg.count());
  return seg;
}

namespace {

void check_inputs(std::span<const double> values, double lambda) {
  if (values.empty()) throw std::invalid_argument("cannot segment an empty sequence");
  if (!std::isfinite(lambda) || lambda < 0.0)
    throw std::invalid_argument("penalty must be finite and nonnegative");
}

std::vector<std::size_t> backtrack(const std::vector<std::size_t>& last, std::size_t n) {
  std::vector<std::size_t> cps;
  for (std::size_t j = last[n]; j > 0; j = last[j]) cps.push_back(j);
  std::reverse(cps.begin(), cps.end());
  return cps;
}

}  // namespace

Segmentation opart(std::span<const double> values, double lambda) {
  check_inputs(values, lambda);
  const std::size_t n = values.size();
  CumulativeStats stats(values);
  std::vector<double> best(n + 1);
  std::vector<std::size_t> last(n + 1, 0);
  best[0] = -lambda;
  for (std::size_t j = 1; j <= n; ++j) {
    double f = std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t i = 0; i < j; ++i) {
      const double c = best[i] + stats.segment_cost(i, j) + lambda;
      if (c < f) {
        f = c;
        arg = i;
      }
    }
    best[j] = f;
    last[j] = arg;
  }
  return make_segmentation(stats, backtrack(last, n), lambda);
}

Segmentation pelt(std::span<const double> values, double lambda) {
  check_inputs(values, lambda);
  const std::size_t n = values.size();
  CumulativeStats stats(values);
  std::vector<double> best(n + 1);
  std::vector<std::size_t> last(n + 1, 0);
  best[0] = -lambda;
  std::vector<std::size_t> candidates{0};
  std::vector<double> partial;
  for (std::size_t j = 1; j <= n; ++j) {
    partial.resize(candidates.size());
    double f = std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t k = 0; k < candidates.size(); ++k) {
      const std::size_t i = candidates[k];
      partial[k] = best[i] + stats.segment_cost(i, j);
      const double c = partial[k] + lambda;
      if (c < f) {
        f = c;
        arg = i;
      }
    }
    best[j] = f;
    last[j] = arg;
    // A candidate strictly worse than F(j) stays strictly worse for every
    // later end point. The slack keeps rounding from pruning a future tie.
    const double slack = 1e-9 * std::max(1.0, std::abs(f));
    std::size_t keep = 0;
    for (std::size_t k = 0; k < candidates.size(); ++k)
      if (partial[k] <= f + slack) candidates[keep++] = candidates[k];
    candidates.resize(keep);
    candidates.push_back(j);
  }
  return make_segmentation(stats, backtrack(last, n), lambda);
}

Segmentation brute_force_segment(std::span<const double> values, double lambda) {
  check_inputs(values, lambda);
  const std::size_t n = values.size();
  if (n > kBruteForceMaxLength)
    throw std::invalid_argument("brute force limited to N <= " + std::to_string(kBruteForceMaxLength));
  auto two_pass = [&](std::size_t i, std::size_t j) {
    double mean = 0.0;
    for (std::size_t t = i; t < j; ++t) mean += values[t];
    mean /= static_cast<double>(j - i);
    double c = 0.0;
    for (std::size_t t = i; t < j; ++t) c += (values[t] - mean) * (values[t] - mean);
    return std::pair{c, mean};
  };
  Segmentation best;
  best.penalized_cost = std::numeric_limits<double>::infinity();
  const std::uint64_t subsets = std::uint64_t{1} << (n - 1);
  for (std::uint64_t mask = 0; mask < subsets; ++mask) {
    Segmentation cand;
    std::size_t prev = 0;
    for (std::size_t t = 1; t <= n; ++t) {
      if (t == n || (mask >> (t - 1)) & 1u) {
        auto [c, m] = two_pass(prev, t);
        cand.data_cost += c;
        cand.means.push_back(m);
        if (t < n) cand.changepoints.push_back(t);
        prev = t;
      }
    }
    cand.penalized_cost = cand.data_cost + lambda * static_cast<double>(cand.count());
    if (cand.penalized_cost < best.penalized_cost) best = std::move(cand);
  }
  return best;
}

}  // namespace penlearn
