#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "penlearn/data_model.hpp"

namespace penlearn {

constexpr std::size_t kBaseFeatureCount = 73;
constexpr std::size_t kFeatureTransformCount = 5;
constexpr std::size_t kFeatureCount = kBaseFeatureCount * kFeatureTransformCount;  // 365

// Entry k*73 + b is transform k (identity, sqrt, log, loglog, square)
// applied to base feature b. Base features enumerate series (data,
// residual, difference) x elementwise map (identity, absolute, square) x
// statistic (sum, mean, sd, q0, q25, q50, q75, q100), then length.
struct FeatureVector {
  std::vector<double> values;
  std::vector<bool> valid;

  std::size_t size() const { return values.size(); }
};

const std::vector<std::string>& feature_names();

// The 73 untransformed statistics in base order.
std::array<double, kBaseFeatureCount> base_features(std::span<const double> values);

// Requires N >= 2.
FeatureVector extract_features(std::span<const double> values);

// Linear interpolation between order statistics (type 7). `sorted` must be
// nonempty and ascending.
double quantile_sorted(std::span<const double> sorted, double q);

enum class PoolStat { Mean, Median };

PoolStat parse_pool_stat(const std::string& name);
std::string to_string(PoolStat stat);

// Non-overlapping windows left to right; a trailing partial window is kept.
std::vector<double> pool(std::span<const double> values, std::size_t window, PoolStat stat);

struct NormalizationStats {
  double mean = 0.0;
  double sd = 1.0;
  bool log1p = true;
};

// z -> log(z + 1) (when enabled) then standardisation with population
// mean/sd. Statistics are computed from `dataset` unless `stats` is given.
std::pair<Dataset, NormalizationStats> log1p_normalize(const Dataset& dataset,
                                                       std::optional<NormalizationStats> stats = {},
                                                       bool apply_log1p = true);

std::vector<double> apply_normalization(std::span<const double> values, const NormalizationStats& stats);


// features.csv: sequenceID followed by the 365 canonical names; invalid
// entries are empty cells.
void write_features(const std::filesystem::path& path, const std::vector<std::string>& ids,
                    const std::vector<FeatureVector>& features);
std::pair<std::vector<std::string>, std::vector<FeatureVector>> load_features(const std::filesystem::path& path);

}  // namespace penlearn
