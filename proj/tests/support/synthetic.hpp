#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "penlearn/data_model.hpp"

namespace penlearn::testing {

struct SyntheticSpec {
  std::size_t count = 200;
  std::size_t min_length = 50;
  std::size_t max_length = 500;
  int min_shifts = 1;
  int max_shifts = 3;
  double min_sd = 0.3;
  double max_sd = 3.0;
  std::uint64_t seed = 2024;
};

// Piecewise-constant Gaussian sequences with planted mean shifts. Each
// planted changepoint gets a positive label (exactly one change within +-4),
// and the interior of every planted segment gets a negative label.
inline Dataset make_synthetic(const SyntheticSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  auto uniform_int = [&](std::size_t lo, std::size_t hi) {
    return lo + static_cast<std::size_t>(rng() % (hi - lo + 1));
  };
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  Dataset ds;
  for (std::size_t s = 0; s < spec.count; ++s) {
    const std::size_t n = uniform_int(spec.min_length, spec.max_length);
    // Changepoints at least kGap apart and kGap from either end: sorted
    // offsets in [0, n - (k+1) kGap] shifted by multiples of kGap.
    constexpr std::size_t kGap = 20;
    const std::size_t k = std::min(n / kGap - 1, uniform_int(static_cast<std::size_t>(spec.min_shifts),
                                                             static_cast<std::size_t>(spec.max_shifts)));
    std::vector<std::size_t> cps(k);
    for (auto& c : cps) c = uniform_int(0, n - (k + 1) * kGap);
    std::sort(cps.begin(), cps.end());
    for (std::size_t i = 0; i < k; ++i) cps[i] += kGap * (i + 1);
    // Log-uniform noise level so the best penalty varies across sequences.
    const double sd = spec.min_sd * std::pow(spec.max_sd / spec.min_sd, unit(rng));

    Sequence seq;
    seq.id = "seq" + std::to_string(1000 + s);
    double mean = 0.0;
    std::size_t next = 0;
    for (std::size_t t = 1; t <= n; ++t) {
      seq.values.push_back(mean + sd * normal(rng));
      if (next < cps.size() && t == cps[next]) {
        const double jump = sd * (1.5 + 1.5 * unit(rng));
        mean += (rng() % 2 == 0) ? jump : -jump;
        ++next;
      }
    }

    std::vector<LabelRegion> labels;
    std::size_t prev = 0;
    for (std::size_t i = 0; i <= cps.size(); ++i) {
      const std::size_t seg_end = i < cps.size() ? cps[i] : n;
      if (seg_end - prev >= 14) {
        labels.push_back({static_cast<std::int64_t>(prev + 6), static_cast<std::int64_t>(seg_end - 5), 0, 0});
      }
      if (i < cps.size()) {
        labels.push_back({static_cast<std::int64_t>(cps[i] - 4), static_cast<std::int64_t>(cps[i] + 5), 1, 1});
      }
      prev = seg_end;
    }
    ds.labels[seq.id] = std::move(labels);
    ds.sequences.push_back(std::move(seq));
  }
  return ds;
}

}  // namespace penlearn::testing
