#pragma once

#include <span>
#include <vector>

#include "penlearn/data_model.hpp"

namespace penlearn {

// Prefix sums of (values - global mean) and their squares; index 0 holds 0.
// Centering keeps the Sum d^2 - (Sum d)^2 / n cancellation small.
class CumulativeStats {
 public:
  explicit CumulativeStats(std::span<const double> values);

  std::size_t size() const { return sum_.size() - 1; }

  // Squared deviation from the mean over positions i+1..j (0 <= i < j <= N).
  double segment_cost(std::size_t i, std::size_t j) const;
  double segment_mean(std::size_t i, std::size_t j) const;

 private:
  std::vector<double> sum_;
  std::vector<double> sum_sq_;
  double shift_ = 0.0;
};

struct Segmentation {
  std::vector<std::size_t> changepoints;  // 1-based, strictly increasing, each in [1, N-1]
  std::vector<double> means;
  double data_cost = 0.0;
  double penalized_cost = 0.0;

  std::size_t count() const { return changepoints.size(); }
};

// Fills means, data_cost and penalized_cost for a given changepoint list.
Segmentation make_segmentation(const CumulativeStats& stats, std::vector<std::size_t> changepoints,
                               double lambda);

// Exact O(N^2) optimal partitioning. Ties in the DP minimisation go to the
// smaller last-changepoint index.
Segmentation opart(std::span<const double> values, double lambda);

// Same minimiser as opart with candidates pruned once they can no longer
// win or tie.
Segmentation pelt(std::span<const double> values, double lambda);

// Exhaustive search over all 2^(N-1) changepoint subsets, segment costs
// computed by the two-pass formula. Test oracle; N <= 16.
Segmentation brute_force_segment(std::span<const double> values, double lambda);

constexpr std::size_t kBruteForceMaxLength = 16;

}  // namespace penlearn
