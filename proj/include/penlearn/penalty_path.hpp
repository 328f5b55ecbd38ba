#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "penlearn/data_model.hpp"

namespace penlearn {

// One piece of the exact map lambda -> optimal segmentation. Interior points
// of (lambda_lo, lambda_hi) all produce `changepoints`; at a shared
// breakpoint both neighbours are optimal.
struct PathSegmentRecord {
  double lambda_lo = 0.0;
  double lambda_hi = 0.0;
  std::size_t changepoint_count = 0;
  double data_cost = 0.0;
  std::vector<std::size_t> changepoints;
  std::optional<ErrorCount> errors;
};

constexpr double kDefaultPathLambdaMin = 1e-6;
constexpr double kDefaultPathLambdaMax = 1e12;

// Breakpoint recursion seeded at lambda_min and lambda_max, then extended to
// (0, inf) using the two limit models: the zero-cost model with the fewest
// changepoints (lambda -> 0) and the single-segment model (lambda -> inf).
// Records are ordered by increasing lambda and tile (0, inf).
std::vector<PathSegmentRecord> penalty_path(std::span<const double> values,
                                            double lambda_min = kDefaultPathLambdaMin,
                                            double lambda_max = kDefaultPathLambdaMax);

void annotate_errors(std::vector<PathSegmentRecord>& path, std::span<const LabelRegion> labels);

// Widest (log scale) run of consecutive minimum-error records; infinite
// widths dominate and ties go to the smaller-lambda run. Requires annotated
// records.
TargetInterval select_target(const std::vector<PathSegmentRecord>& path);

TargetInterval target_interval(std::span<const double> values, std::span<const LabelRegion> labels);

// Brute-force counterpart: label error at each grid penalty, widest
// minimum-error run of grid points, bounds returned as [log first, log last].
TargetInterval grid_oracle_target(std::span<const double> values,
                                  std::span<const LabelRegion> labels,
                                  std::span<const double> grid);

std::vector<double> geometric_grid(double lo, double hi, std::size_t count);

// Targets for every labeled sequence of the dataset. Sequences whose target
// cannot be computed are skipped and reported through `skipped`.
std::map<std::string, TargetInterval> compute_targets(const Dataset& dataset,
                                                      std::vector<std::string>* skipped = nullptr);

}  // namespace penlearn
