#include "penlearn/featurizer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "csv.hpp"

namespace penlearn {

namespace {

constexpr std::array<const char*, 3> kSeries{"data", "residual", "difference"};
constexpr std::array<const char*, 3> kElementwise{"identity", "absolute", "square"};
constexpr std::array<const char*, 8> kStats{"sum", "mean", "sd", "q0", "q25", "q50", "q75", "q100"};
constexpr std::array<const char*, 5> kTransforms{"identity", "sqrt", "log", "loglog", "square"};

// Appends the 8 statistics of `v` in declared order.
void append_stats(std::vector<double> v, double*& out) {
  const double n = static_cast<double>(v.size());
  const double sum = std::accumulate(v.begin(), v.end(), 0.0);
  const double mean = sum / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  std::sort(v.begin(), v.end());
  *out++ = sum;
  *out++ = mean;
  *out++ = std::sqrt(ss / n);
  for (double q : {0.0, 0.25, 0.5, 0.75, 1.0}) *out++ = quantile_sorted(v, q);
}

}  // namespace

const std::vector<std::string>& feature_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> base;
    for (auto s : kSeries)
      for (auto e : kElementwise)
        for (auto st : kStats) base.push_back(std::string(s) + "." + e + "." + st);
    base.push_back("length");
    std::vector<std::string> out;
    for (auto t : kTransforms)
      for (const auto& b : base) out.push_back(std::string(t) + "." + b);
    return out;
  }();
  return names;
}

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("quantile of empty data");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

std::array<double, kBaseFeatureCount> base_features(std::span<const double> values) {
  if (values.size() < 2) throw std::invalid_argument("feature extraction needs at least 2 values");
  const std::size_t n = values.size();
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
  std::array<std::vector<double>, 3> series;
  series[0].assign(values.begin(), values.end());
  for (double x : values) series[1].push_back(x - mean);
  for (std::size_t t = 1; t < n; ++t) series[2].push_back(values[t] - values[t - 1]);

  std::array<double, kBaseFeatureCount> out{};
  double* cursor = out.data();
  for (const auto& s : series) {
    append_stats(s, cursor);
    std::vector<double> tmp(s.size());
    std::transform(s.begin(), s.end(), tmp.begin(), [](double x) { return std::abs(x); });
    append_stats(tmp, cursor);
    std::transform(s.begin(), s.end(), tmp.begin(), [](double x) { return x * x; });
    append_stats(tmp, cursor);
  }
  *cursor = static_cast<double>(n);
  return out;
}

FeatureVector extract_features(std::span<const double> values) {
  const auto base = base_features(values);
  FeatureVector fv;
  fv.values.resize(kFeatureCount);
  fv.valid.resize(kFeatureCount);
  for (std::size_t b = 0; b < kBaseFeatureCount; ++b) {
    const double x = base[b];
    const std::array<std::pair<double, bool>, kFeatureTransformCount> t{{
        {x, true},
        {x >= 0.0 ? std::sqrt(x) : 0.0, x >= 0.0},
        {x > 0.0 ? std::log(x) : 0.0, x > 0.0},
        {x > 1.0 ? std::log(std::log(x)) : 0.0, x > 1.0},
        {x * x, true},
    }};
    for (std::size_t k = 0; k < kFeatureTransformCount; ++k) {
      const auto idx = k * kBaseFeatureCount + b;
      const bool ok = t[k].second && std::isfinite(t[k].first) && std::isfinite(x);
      fv.values[idx] = ok ? t[k].first : 0.0;
      fv.valid[idx] = ok;
    }
  }
  return fv;
}

PoolStat parse_pool_stat(const std::string& name) {
  if (name == "mean") return PoolStat::Mean;
  if (name == "median") return PoolStat::Median;
  throw std::invalid_argument("unknown pooling statistic '" + name + "' (mean|median)");
}

std::string to_string(PoolStat stat) { return stat == PoolStat::Mean ? "mean" : "median"; }

std::vector<double> pool(std::span<const double> values, std::size_t window, PoolStat stat) {
  if (window < 1) throw std::invalid_argument("pooling window must be >= 1");
  std::vector<double> out;
  out.reserve(values.size() / window + 1);
  std::vector<double> buf;
  for (std::size_t start = 0; start < values.size(); start += window) {
    auto chunk = values.subspan(start, std::min(window, values.size() - start));
    if (stat == PoolStat::Mean) {
      out.push_back(std::accumulate(chunk.begin(), chunk.end(), 0.0) / static_cast<double>(chunk.size()));
    } else {
      buf.assign(chunk.begin(), chunk.end());
      std::sort(buf.begin(), buf.end());
      out.push_back(quantile_sorted(buf, 0.5));
    }
  }
  return out;
}

std::vector<double> apply_normalization(std::span<const double> values, const NormalizationStats& stats) {
  std::vector<double> out(values.size());
  for (std::size_t t = 0; t < values.size(); ++t) {
    double z = values[t];
    if (stats.log1p) {
      if (!(z > -1.0)) throw DataError("log(z+1) requires z > -1, got " + format_double(z));
      z = std::log1p(z);
    }
    out[t] = (z - stats.mean) / stats.sd;
  }
  return out;
}

std::pair<Dataset, NormalizationStats> log1p_normalize(const Dataset& dataset,
                                                       std::optional<NormalizationStats> stats,
                                                       bool apply_log1p) {
  if (!stats) {
    NormalizationStats s;
    s.log1p = apply_log1p;
    double sum = 0.0, count = 0.0;
    std::vector<double> transformed;
    for (const auto& seq : dataset.sequences)
      for (double z : seq.values) {
        if (apply_log1p && !(z > -1.0)) throw DataError("log(z+1) requires z > -1 in sequence " + seq.id);
        transformed.push_back(apply_log1p ? std::log1p(z) : z);
        sum += transformed.back();
        count += 1.0;
      }
    if (count == 0.0) throw DataError("cannot normalise an empty dataset");
    s.mean = sum / count;
    double ss = 0.0;
    for (double z : transformed) ss += (z - s.mean) * (z - s.mean);
    s.sd = std::sqrt(ss / count);
    if (!(s.sd > 0.0)) throw DataError("normalisation standard deviation is zero");
    stats = s;
  }
  Dataset out = dataset;
  for (auto& seq : out.sequences) seq.values = apply_normalization(seq.values, *stats);
  return {std::move(out), *stats};
}

void write_features(const std::filesystem::path& path, const std::vector<std::string>& ids,
                    const std::vector<FeatureVector>& features) {
  if (ids.size() != features.size()) throw std::invalid_argument("id and feature counts differ");
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "sequenceID";
  for (const auto& n : feature_names()) out << ',' << n;
  out << '\n';
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out << ids[i];
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
      out << ',';
      if (features[i].valid[j]) out << format_double(features[i].values[j]);
    }
    out << '\n';
  }
}

std::pair<std::vector<std::string>, std::vector<FeatureVector>> load_features(const std::filesystem::path& path) {
  std::vector<std::string> header{"sequenceID"};
  header.insert(header.end(), feature_names().begin(), feature_names().end());
  csv::Reader reader(path, header);
  std::pair<std::vector<std::string>, std::vector<FeatureVector>> out;
  std::vector<std::string_view> row;
  while (reader.next(row)) {
    FeatureVector fv;
    fv.values.assign(kFeatureCount, 0.0);
    fv.valid.assign(kFeatureCount, false);
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
      auto cell = csv::trim(row[j + 1]);
      if (cell.empty()) continue;
      try {
        fv.values[j] = parse_double(cell);
      } catch (const std::invalid_argument& e) {
        throw ParseError(path.string() + ": " + e.what(), reader.line());
      }
      fv.valid[j] = std::isfinite(fv.values[j]);
    }
    out.first.emplace_back(csv::trim(row[0]));
    out.second.push_back(std::move(fv));
  }
  return out;
}

}  // namespace penlearn
