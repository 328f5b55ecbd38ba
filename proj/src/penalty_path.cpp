#include "penlearn/penalty_path.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "penlearn/label_eval.hpp"
#include "penlearn/segmenter.hpp"

namespace penlearn {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Model {
  std::vector<std::size_t> changepoints;
  double cost = 0.0;
  std::size_t count() const { return changepoints.size(); }
};

class PathBuilder {
 public:
  explicit PathBuilder(std::span<const double> values) : values_(values), stats_(values) {}

  // pelt returns opart's segmentation and prunes hard at the small
  // penalties that dominate the path.
  Model solve(double lambda) const {
    auto seg = pelt(values_, lambda);
    return {std::move(seg.changepoints), seg.data_cost};
  }

  Model from_changepoints(std::vector<std::size_t> cps) const {
    auto seg = make_segmentation(stats_, std::move(cps), 0.0);
    return {std::move(seg.changepoints), seg.data_cost};
  }

  // Appends every model strictly between `a` (more changepoints) and `b`
  // followed by `b` itself.
  void explore(const Model& a, const Model& b, std::vector<Model>& out) const {
    if (a.count() <= b.count()) return;
    double bp = (b.cost - a.cost) / static_cast<double>(a.count() - b.count());
    if (!(bp > 0.0)) bp = std::numeric_limits<double>::min();
    Model mid = solve(bp);
    const double line = a.cost + bp * static_cast<double>(a.count());
    const double pen = mid.cost + bp * static_cast<double>(mid.count());
    const double tol = 1e-10 * std::max(1.0, std::abs(line));
    if (mid.count() < a.count() && mid.count() > b.count() && pen < line - tol) {
      explore(a, mid, out);
      out.push_back(mid);
      explore(mid, b, out);
    }
  }

 private:
  std::span<const double> values_;
  CumulativeStats stats_;
};

double breakpoint(const Model& a, const Model& b) {
  return (b.cost - a.cost) / static_cast<double>(a.count() - b.count());
}

}  // namespace

std::vector<PathSegmentRecord> penalty_path(std::span<const double> values, double lambda_min,
                                            double lambda_max) {
  if (!(lambda_min > 0.0) || !(lambda_max > lambda_min) || !std::isfinite(lambda_max))
    throw std::invalid_argument("penalty path requires 0 < lambda_min < lambda_max < inf");
  if (values.empty()) throw std::invalid_argument("cannot compute a path for an empty sequence");
  PathBuilder builder(values);

  std::vector<std::size_t> all_changes;
  for (std::size_t t = 1; t < values.size(); ++t)
    if (values[t - 1] != values[t]) all_changes.push_back(t);

  // Anchors ordered by decreasing changepoint count.
  std::vector<Model> anchors;
  auto add_anchor = [&](Model m) {
    if (anchors.empty() || m.count() < anchors.back().count()) anchors.push_back(std::move(m));
  };
  add_anchor(builder.from_changepoints(all_changes));
  add_anchor(builder.solve(lambda_min));
  add_anchor(builder.solve(lambda_max));
  add_anchor(builder.from_changepoints({}));

  std::vector<Model> models{anchors.front()};
  for (std::size_t k = 1; k < anchors.size(); ++k) {
    builder.explore(anchors[k - 1], anchors[k], models);
    models.push_back(anchors[k]);
  }

  // Drop any model that rounding placed off the lower envelope.
  std::vector<double> bps;
  for (bool changed = true; changed;) {
    changed = false;
    bps.clear();
    for (std::size_t k = 1; k < models.size(); ++k) bps.push_back(breakpoint(models[k - 1], models[k]));
    for (std::size_t k = 1; k < bps.size(); ++k) {
      if (bps[k] <= bps[k - 1]) {
        models.erase(models.begin() + static_cast<std::ptrdiff_t>(k));
        changed = true;
        break;
      }
    }
  }

  std::vector<PathSegmentRecord> path;
  for (std::size_t k = 0; k < models.size(); ++k) {
    PathSegmentRecord r;
    r.lambda_lo = k == 0 ? 0.0 : bps[k - 1];
    r.lambda_hi = k + 1 == models.size() ? kInf : bps[k];
    r.changepoint_count = models[k].count();
    r.data_cost = models[k].cost;
    r.changepoints = std::move(models[k].changepoints);
    path.push_back(std::move(r));
  }
  return path;
}

void annotate_errors(std::vector<PathSegmentRecord>& path, std::span<const LabelRegion> labels) {
  for (auto& r : path) r.errors = count_errors(r.changepoints, labels);
}

namespace {

// Index range [first, last] of the selected run given per-point errors and
// log-width of a run.
template <typename WidthFn>
std::pair<std::size_t, std::size_t> widest_min_run(const std::vector<long>& errors, WidthFn width) {
  const long best = *std::min_element(errors.begin(), errors.end());
  std::pair<std::size_t, std::size_t> chosen{0, 0};
  double chosen_width = -kInf;
  for (std::size_t a = 0; a < errors.size();) {
    if (errors[a] != best) {
      ++a;
      continue;
    }
    std::size_t b = a;
    while (b + 1 < errors.size() && errors[b + 1] == best) ++b;
    const double w = width(a, b);
    if (w > chosen_width) {
      chosen = {a, b};
      chosen_width = w;
    }
    a = b + 1;
  }
  return chosen;
}

}  // namespace

TargetInterval select_target(const std::vector<PathSegmentRecord>& path) {
  if (path.empty()) throw std::invalid_argument("empty penalty path");
  std::vector<long> errors;
  for (const auto& r : path) {
    if (!r.errors) throw std::invalid_argument("penalty path records are not annotated with errors");
    errors.push_back(r.errors->errors());
  }
  auto [a, b] = widest_min_run(errors, [&](std::size_t i, std::size_t j) {
    const double lo = path[i].lambda_lo, hi = path[j].lambda_hi;
    if (lo == 0.0 || std::isinf(hi)) return kInf;
    return std::log(hi) - std::log(lo);
  });
  const double lo = path[a].lambda_lo, hi = path[b].lambda_hi;
  return {lo == 0.0 ? -kInf : std::log(lo), std::log(hi)};
}

TargetInterval target_interval(std::span<const double> values, std::span<const LabelRegion> labels) {
  if (labels.empty()) throw std::invalid_argument("target interval needs at least one label");
  auto path = penalty_path(values);
  annotate_errors(path, labels);
  return select_target(path);
}

TargetInterval grid_oracle_target(std::span<const double> values,
                                  std::span<const LabelRegion> labels,
                                  std::span<const double> grid) {
  if (grid.empty()) throw std::invalid_argument("empty penalty grid");
  if (!std::is_sorted(grid.begin(), grid.end()) || !(grid.front() > 0.0))
    throw std::invalid_argument("penalty grid must be sorted and positive");
  std::vector<long> errors;
  for (double lambda : grid) errors.push_back(count_errors(opart(values, lambda).changepoints, labels).errors());
  auto [a, b] = widest_min_run(
      errors, [&](std::size_t i, std::size_t j) { return std::log(grid[j]) - std::log(grid[i]); });
  return {std::log(grid[a]), std::log(grid[b])};
}

std::vector<double> geometric_grid(double lo, double hi, std::size_t count) {
  if (!(lo > 0.0) || !(hi >= lo) || count == 0) throw std::invalid_argument("invalid geometric grid");
  std::vector<double> g(count);
  const double step = count > 1 ? (std::log(hi) - std::log(lo)) / static_cast<double>(count - 1) : 0.0;
  for (std::size_t k = 0; k < count; ++k) g[k] = std::exp(std::log(lo) + step * static_cast<double>(k));
  g.front() = lo;
  if (count > 1) g.back() = hi;
  return g;
}

std::map<std::string, TargetInterval> compute_targets(const Dataset& dataset,
                                                      std::vector<std::string>* skipped) {
  std::map<std::string, TargetInterval> out;
  for (const auto& s : dataset.sequences) {
    auto it = dataset.labels.find(s.id);
    if (it == dataset.labels.end() || it->second.empty()) {
      if (skipped) skipped->push_back(s.id + ": no labels");
      continue;
    }
    try {
      out[s.id] = target_interval(s.values, it->second);
    } catch (const std::exception& e) {
      if (skipped) skipped->push_back(s.id + ": " + e.what());
    }
  }
  return out;
}

}  // namespace penlearn
