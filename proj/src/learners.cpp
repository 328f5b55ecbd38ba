#include "penlearn/learners.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include "training.hpp"

namespace penlearn {

namespace {

double population_variance(std::span<const double> values) {
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return ss / n;
}

void require_two(std::span<const double> values) {
  if (values.size() < 2) throw std::invalid_argument("unsupervised penalty needs N >= 2");
}

}  // namespace

double bic_penalty(std::span<const double> values) {
  require_two(values);
  return population_variance(values) * std::log(static_cast<double>(values.size()));
}

double aic_penalty(std::span<const double> values, AicFeature feature) {
  require_two(values);
  const double var = population_variance(values);
  return 2.0 * (feature == AicFeature::Variance ? var : std::sqrt(var));
}

// ---------------------------------------------------------------------------

namespace detail {

std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i-- > 1;) std::swap(idx[i], idx[rng() % (i + 1)]);
  return idx;
}

ValidationSplit split_validation(std::size_t n, double fraction, std::uint64_t seed) {
  ValidationSplit s;
  const auto n_val = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  if (n_val == 0 || n_val >= n) {
    s.train.resize(n);
    std::iota(s.train.begin(), s.train.end(), 0);
    s.validation = s.train;
    return s;
  }
  auto idx = shuffled_indices(n, seed);
  s.validation.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_val));
  s.train.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_val), idx.end());
  std::sort(s.validation.begin(), s.validation.end());
  std::sort(s.train.begin(), s.train.end());
  return s;
}

TrainMeta adam_train(std::vector<double>& params, const Objective& objective, std::size_t instances,
                     const TrainConfig& cfg) {
  TrainMeta meta;
  meta.seed = cfg.seed;
  if (cfg.max_iterations < 0) throw std::invalid_argument("max_iterations must be >= 0");
  const auto split = split_validation(instances, cfg.validation_fraction, cfg.seed);
  auto validation_loss = [&] {
    double s = 0.0;
    for (auto i : split.validation) s += objective.loss(i);
    return s / static_cast<double>(split.validation.size());
  };
  meta.best_validation_loss = validation_loss();
  meta.best_loss_curve.push_back(meta.best_validation_loss);
  if (cfg.max_iterations == 0) return meta;

  std::size_t points = 0;
  for (auto i : split.train) points += objective.points(i);
  const bool full_batch = points <= cfg.full_batch_points;

  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  std::vector<double> m1(params.size(), 0.0), m2(params.size(), 0.0), grad(params.size());
  std::vector<double> best = params;
  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order = split.train;
  long step = 0;
  int since_best = 0;
  for (int it = 1; it <= cfg.max_iterations; ++it) {
    if (!full_batch)
      for (std::size_t i = order.size(); i-- > 1;) std::swap(order[i], order[rng() % (i + 1)]);
    const std::size_t batch = full_batch ? order.size() : std::max<std::size_t>(1, cfg.batch_size);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t stop = std::min(order.size(), start + batch);
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t b = start; b < stop; ++b) objective.loss_grad(order[b], grad);
      const double scale = 1.0 / static_cast<double>(stop - start);
      ++step;
      const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
      for (std::size_t p = 0; p < params.size(); ++p) {
        const double g = grad[p] * scale;
        m1[p] = beta1 * m1[p] + (1.0 - beta1) * g;
        m2[p] = beta2 * m2[p] + (1.0 - beta2) * g * g;
        params[p] -= cfg.step_size * (m1[p] / c1) / (std::sqrt(m2[p] / c2) + eps);
      }
    }
    meta.iterations = it;
    const double vl = validation_loss();
    if (vl < meta.best_validation_loss) {
      meta.best_validation_loss = vl;
      meta.best_iteration = it;
      best = params;
      since_best = 0;
    } else {
      ++since_best;
    }
    meta.best_loss_curve.push_back(meta.best_validation_loss);
    if (since_best >= cfg.patience) break;
  }
  params = std::move(best);
  meta.trained = true;
  return meta;
}

}  // namespace detail

// ---------------------------------------------------------------------------

FeatureScaling FeatureScaling::fit(std::span<const FeatureVector> features) {
  if (features.empty()) throw std::invalid_argument("no feature vectors to fit");
  const auto& names = feature_names();
  FeatureScaling s;
  const double n = static_cast<double>(features.size());
  for (std::size_t j = 0; j < kFeatureCount; ++j) {
    bool ok = true;
    double sum = 0.0;
    for (const auto& fv : features) {
      if (!fv.valid[j]) {
        ok = false;
        break;
      }
      sum += fv.values[j];
    }
    if (!ok) continue;
    const double mean = sum / n;
    double ss = 0.0;
    for (const auto& fv : features) ss += (fv.values[j] - mean) * (fv.values[j] - mean);
    const double sd = std::sqrt(ss / n);
    if (!(sd > 1e-12 * std::max(1.0, std::abs(mean))) || !std::isfinite(sd)) continue;
    s.indices.push_back(j);
    s.names.push_back(names[j]);
    s.mean.push_back(mean);
    s.sd.push_back(sd);
  }
  return s;
}

std::vector<double> FeatureScaling::transform(const FeatureVector& fv) const {
  if (fv.size() != kFeatureCount) throw DataError("feature vector has the wrong length");
  std::vector<double> x(indices.size());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    x[k] = fv.valid[indices[k]] ? (fv.values[indices[k]] - mean[k]) / sd[k] : 0.0;
  }
  return x;
}

ConstantModel fit_constant(std::span<const TargetInterval> targets, const HingeConfig& cfg) {
  cfg.validate();
  std::vector<double> candidates;
  for (const auto& t : targets) {
    if (std::isfinite(t.lo)) candidates.push_back(t.lo);
    if (std::isfinite(t.hi)) candidates.push_back(t.hi);
    if (std::isfinite(t.lo) && std::isfinite(t.hi)) candidates.push_back(0.5 * (t.lo + t.hi));
  }
  if (candidates.empty()) throw std::invalid_argument("every target is unbounded on both sides");
  std::sort(candidates.begin(), candidates.end());
  double best_c = candidates.front();
  double best_loss = std::numeric_limits<double>::infinity();
  for (double c : candidates) {
    double loss = 0.0;
    for (const auto& t : targets) loss += hinge_loss(c, t, cfg);
    if (loss < best_loss) {
      best_loss = loss;
      best_c = c;
    }
  }
  return {best_c};
}

double soft_threshold(double x, double threshold) {
  if (x > threshold) return x - threshold;
  if (x < -threshold) return x + threshold;
  return 0.0;
}

namespace {

struct StandardizedProblem {
  FeatureScaling scaling;
  std::vector<std::vector<double>> rows;
};

StandardizedProblem standardize(std::span<const FeatureVector> features) {
  StandardizedProblem p;
  p.scaling = FeatureScaling::fit(features);
  for (const auto& fv : features) p.rows.push_back(p.scaling.transform(fv));
  return p;
}

// Smooth part of the linear objective on standardised features: value and
// gradient wrt (w, b) packed as [w..., b].
double linear_smooth(const StandardizedProblem& p, std::span<const TargetInterval> targets,
                     std::span<const double> wb, std::span<double> grad, const HingeConfig& cfg) {
  const std::size_t d = wb.size() - 1;
  std::fill(grad.begin(), grad.end(), 0.0);
  double loss = 0.0;
  for (std::size_t i = 0; i < p.rows.size(); ++i) {
    double pred = wb[d];
    for (std::size_t j = 0; j < d; ++j) pred += p.rows[i][j] * wb[j];
    loss += hinge_loss(pred, targets[i], cfg);
    const double g = hinge_grad(pred, targets[i], cfg);
    if (g == 0.0) continue;
    for (std::size_t j = 0; j < d; ++j) grad[j] += g * p.rows[i][j];
    grad[d] += g;
  }
  return loss;
}

struct FistaResult {
  std::vector<double> wb;
  int iterations = 0;
  double objective = 0.0;
};

FistaResult fista(const StandardizedProblem& p, std::span<const TargetInterval> targets, double l1,
                  const TrainConfig& cfg, double bias0) {
  const std::size_t d = p.scaling.indices.size();
  auto penalty = [&](std::span<const double> wb) {
    if (std::isinf(l1)) return 0.0;
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) s += std::abs(wb[j]);
    return l1 * s;
  };
  std::vector<double> x(d + 1, 0.0), x_prev, y, z(d + 1), gy(d + 1), gz(d + 1);
  x[d] = bias0;
  x_prev = x;
  y = x;
  double lipschitz = 1.0;
  double t = 1.0;
  double f_x = linear_smooth(p, targets, x, gz, cfg.loss) + penalty(x);
  FistaResult res;
  for (int k = 1; k <= std::max(1, cfg.max_iterations); ++k) {
    res.iterations = k;
    const double fy = linear_smooth(p, targets, y, gy, cfg.loss);
    double fz = 0.0;
    for (int tries = 0; tries < 200; ++tries) {
      for (std::size_t j = 0; j <= d; ++j) {
        const double step = y[j] - gy[j] / lipschitz;
        z[j] = j == d ? step : (std::isinf(l1) ? 0.0 : soft_threshold(step, l1 / lipschitz));
      }
      fz = linear_smooth(p, targets, z, gz, cfg.loss);
      double quad = fy;
      for (std::size_t j = 0; j <= d; ++j)
        quad += gy[j] * (z[j] - y[j]) + 0.5 * lipschitz * (z[j] - y[j]) * (z[j] - y[j]);
      if (fz <= quad + 1e-12 * std::max(1.0, std::abs(quad))) break;
      lipschitz *= 2.0;
    }
    const double f_z = fz + penalty(z);
    if (f_z > f_x) {
      // Momentum overshot: restart from the last iterate.
      t = 1.0;
      y = x;
      continue;
    }
    const double decrease = f_x - f_z;
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    for (std::size_t j = 0; j <= d; ++j) y[j] = z[j] + ((t - 1.0) / t_next) * (z[j] - x[j]);
    x_prev = x;
    x = z;
    f_x = f_z;
    t = t_next;
    if (decrease < 1e-8) break;
  }
  res.wb = x;
  res.objective = f_x;
  return res;
}

LinearModel to_original_space(const FeatureScaling& scaling, std::span<const double> wb, double l1) {
  LinearModel m;
  m.scaling = scaling;
  m.l1 = l1;
  const std::size_t d = scaling.indices.size();
  m.weights.resize(d);
  m.bias = wb[d];
  for (std::size_t j = 0; j < d; ++j) {
    m.weights[j] = wb[j] / scaling.sd[j];
    m.bias -= m.weights[j] * scaling.mean[j];
  }
  return m;
}

void check_training_inputs(std::size_t features, std::size_t targets) {
  if (features == 0) throw std::invalid_argument("empty training set");
  if (features != targets) throw std::invalid_argument("feature and target counts differ");
}

}  // namespace

LinearModel fit_linear_fista(std::span<const FeatureVector> features,
                             std::span<const TargetInterval> targets, double l1,
                             const TrainConfig& cfg) {
  check_training_inputs(features.size(), targets.size());
  if (!(l1 >= 0.0)) throw std::invalid_argument("l1 penalty must be nonnegative");
  cfg.loss.validate();
  auto problem = standardize(features);
  if (problem.scaling.indices.empty()) throw DataError("all features are invalid or constant");
  const double bias0 = fit_constant(targets, cfg.loss).log_lambda;
  auto res = fista(problem, targets, l1, cfg, bias0);
  auto model = to_original_space(problem.scaling, res.wb, l1);
  model.meta.trained = true;
  model.meta.iterations = res.iterations;
  model.meta.best_iteration = res.iterations;
  model.meta.best_validation_loss = res.objective;
  model.meta.seed = cfg.seed;
  return model;
}

double linear_l1_max(std::span<const FeatureVector> features, std::span<const TargetInterval> targets,
                     const TrainConfig& cfg) {
  check_training_inputs(features.size(), targets.size());
  auto problem = standardize(features);
  const std::size_t d = problem.scaling.indices.size();
  if (d == 0) throw DataError("all features are invalid or constant");
  const double bias0 = fit_constant(targets, cfg.loss).log_lambda;
  auto res = fista(problem, targets, std::numeric_limits<double>::infinity(), cfg, bias0);
  std::vector<double> grad(d + 1);
  linear_smooth(problem, targets, res.wb, grad, cfg.loss);
  double mx = 0.0;
  for (std::size_t j = 0; j < d; ++j) mx = std::max(mx, std::abs(grad[j]));
  return mx;
}

std::vector<double> linear_l1_grid(std::span<const FeatureVector> features,
                                   std::span<const TargetInterval> targets, const TrainConfig& cfg) {
  const double top = linear_l1_max(features, targets, cfg);
  std::vector<double> grid{0.001};
  while (grid.back() < top) grid.push_back(grid.back() * 1.2);
  return grid;
}

// ---------------------------------------------------------------------------

std::size_t MlpModel::param_count() const {
  std::size_t n = 0;
  for (std::size_t l = 1; l < layer_sizes.size(); ++l) n += layer_sizes[l] * (layer_sizes[l - 1] + 1);
  return n;
}

MlpModel init_mlp(std::size_t inputs, const std::vector<std::size_t>& hidden_sizes, std::uint64_t seed,
                  double bias) {
  if (hidden_sizes.empty() || hidden_sizes.size() > 3)
    throw std::invalid_argument("MLP needs 1 to 3 hidden layers");
  for (auto h : hidden_sizes)
    if (h < 1 || h > 512) throw std::invalid_argument("MLP hidden sizes must be in 1..512");
  MlpModel m;
  m.layer_sizes.push_back(inputs);
  m.layer_sizes.insert(m.layer_sizes.end(), hidden_sizes.begin(), hidden_sizes.end());
  m.layer_sizes.push_back(1);
  m.params.resize(m.param_count());
  std::mt19937_64 rng(seed);
  std::size_t off = 0;
  for (std::size_t l = 1; l < m.layer_sizes.size(); ++l) {
    const std::size_t in = m.layer_sizes[l - 1], out = m.layer_sizes[l];
    const double r = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(in, 1)));
    std::uniform_real_distribution<double> u(-r, r);
    for (std::size_t k = 0; k < out * (in + 1); ++k) m.params[off + k] = u(rng);
    off += out * (in + 1);
  }
  m.params.back() = bias;
  m.meta.seed = seed;
  return m;
}

namespace {

// Activations per layer (post-ReLU for hidden layers, raw for output).
double mlp_run(const MlpModel& model, std::span<const double> x, std::vector<std::vector<double>>* acts) {
  if (x.size() != model.layer_sizes.front()) throw std::invalid_argument("MLP input size mismatch");
  std::vector<double> cur(x.begin(), x.end()), next;
  if (acts) acts->assign(1, cur);
  std::size_t off = 0;
  const std::size_t last = model.layer_sizes.size() - 1;
  for (std::size_t l = 1; l <= last; ++l) {
    const std::size_t in = model.layer_sizes[l - 1], out = model.layer_sizes[l];
    const double* w = model.params.data() + off;
    const double* b = w + out * in;
    next.assign(out, 0.0);
    for (std::size_t r = 0; r < out; ++r) {
      double s = b[r];
      for (std::size_t j = 0; j < in; ++j) s += w[r * in + j] * cur[j];
      next[r] = l == last ? s : std::max(0.0, s);
    }
    off += out * (in + 1);
    cur.swap(next);
    if (acts) acts->push_back(cur);
  }
  return cur[0];
}

}  // namespace

double mlp_forward(const MlpModel& model, std::span<const double> standardized) {
  return mlp_run(model, standardized, nullptr);
}

double mlp_loss_grad(const MlpModel& model, std::span<const double> standardized,
                     const TargetInterval& target, const HingeConfig& cfg, std::span<double> grad) {
  if (grad.size() != model.params.size()) throw std::invalid_argument("gradient buffer size mismatch");
  std::vector<std::vector<double>> acts;
  const double pred = mlp_run(model, standardized, &acts);
  const double dpred = hinge_grad(pred, target, cfg);
  if (dpred != 0.0) {
    const std::size_t last = model.layer_sizes.size() - 1;
    std::vector<std::size_t> offsets(last + 1, 0);
    for (std::size_t l = 1; l <= last; ++l)
      offsets[l] = offsets[l - 1] + (l > 1 ? model.layer_sizes[l - 1] * (model.layer_sizes[l - 2] + 1) : 0);
    std::vector<double> delta{dpred}, prev;
    for (std::size_t l = last; l >= 1; --l) {
      const std::size_t in = model.layer_sizes[l - 1], out = model.layer_sizes[l];
      const std::size_t off = offsets[l];
      const double* w = model.params.data() + off;
      const auto& a_in = acts[l - 1];
      for (std::size_t r = 0; r < out; ++r) {
        grad[off + out * in + r] += delta[r];
        for (std::size_t j = 0; j < in; ++j) grad[off + r * in + j] += delta[r] * a_in[j];
      }
      if (l == 1) break;
      prev.assign(in, 0.0);
      for (std::size_t j = 0; j < in; ++j) {
        if (a_in[j] <= 0.0) continue;  // ReLU inactive
        double s = 0.0;
        for (std::size_t r = 0; r < out; ++r) s += w[r * in + j] * delta[r];
        prev[j] = s;
      }
      delta.swap(prev);
    }
  }
  return hinge_loss(pred, target, cfg);
}

MlpModel fit_mlp(std::span<const FeatureVector> features, std::span<const TargetInterval> targets,
                 const std::vector<std::size_t>& hidden_sizes, const TrainConfig& cfg) {
  check_training_inputs(features.size(), targets.size());
  cfg.loss.validate();
  auto problem = standardize(features);
  if (problem.scaling.indices.empty()) throw DataError("all features are invalid or constant");
  const double bias = fit_constant(targets, cfg.loss).log_lambda;
  MlpModel model = init_mlp(problem.scaling.indices.size(), hidden_sizes, cfg.seed, bias);
  model.scaling = problem.scaling;
  detail::Objective obj;
  obj.loss_grad = [&](std::size_t i, std::span<double> grad) {
    return mlp_loss_grad(model, problem.rows[i], targets[i], cfg.loss, grad);
  };
  obj.loss = [&](std::size_t i) { return hinge_loss(mlp_forward(model, problem.rows[i]), targets[i], cfg.loss); };
  obj.points = [&](std::size_t) { return std::size_t{1}; };
  model.meta = detail::adam_train(model.params, obj, features.size(), cfg);
  return model;
}

// ---------------------------------------------------------------------------

std::string model_kind(const LearnerModel& model) {
  struct V {
    std::string operator()(const ConstantModel&) const { return "constant"; }
    std::string operator()(const LinearModel&) const { return "linear"; }
    std::string operator()(const MlpModel&) const { return "mlp"; }
    std::string operator()(const RecurrentModel& m) const { return to_string(m.arch.cell); }
  };
  return std::visit(V{}, model);
}

bool expects_features(const LearnerModel& model) {
  return std::holds_alternative<LinearModel>(model) || std::holds_alternative<MlpModel>(model);
}

double predict_log(const LearnerModel& model, const FeatureVector& features) {
  if (const auto* c = std::get_if<ConstantModel>(&model)) return c->log_lambda;
  if (const auto* l = std::get_if<LinearModel>(&model)) {
    double y = l->bias;
    for (std::size_t k = 0; k < l->weights.size(); ++k) {
      const auto j = l->scaling.indices[k];
      y += l->weights[k] * (features.valid.at(j) ? features.values[j] : l->scaling.mean[k]);
    }
    return y;
  }
  if (const auto* m = std::get_if<MlpModel>(&model)) return mlp_forward(*m, m->scaling.transform(features));
  throw KindMismatch("model kind '" + model_kind(model) + "' expects a sequence input, got features");
}

double predict_log(const LearnerModel& model, std::span<const double> raw_values) {
  if (const auto* c = std::get_if<ConstantModel>(&model)) return c->log_lambda;
  if (const auto* r = std::get_if<RecurrentModel>(&model))
    return recurrent_forward(*r, r->preprocessing.apply(raw_values)).log_lambda;
  throw KindMismatch("model kind '" + model_kind(model) + "' expects a features input, got sequence");
}

double predict(const LearnerModel& model, const FeatureVector& features) {
  return std::exp(predict_log(model, features));
}

double predict(const LearnerModel& model, std::span<const double> raw_values) {
  return std::exp(predict_log(model, raw_values));
}

// ---------------------------------------------------------------------------

GradCheckKind parse_grad_check_kind(const std::string& name) {
  if (name == "mlp") return GradCheckKind::Mlp;
  if (name == "rnn") return GradCheckKind::Rnn;
  if (name == "lstm") return GradCheckKind::Lstm;
  if (name == "gru") return GradCheckKind::Gru;
  throw std::invalid_argument("unknown gradient check kind '" + name + "' (mlp|rnn|lstm|gru)");
}

GradCheckReport grad_check(GradCheckKind kind, std::size_t trials, double tolerance, std::uint64_t seed) {
  constexpr double h = 1e-6;
  constexpr std::size_t instances = 3;
  GradCheckReport report;
  report.trials = trials;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  auto pick = [&](int lo, int hi) { return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1)); };

  for (std::size_t trial = 0; trial < trials; ++trial) {
    HingeConfig cfg{0.25 * (unit(rng) + 1.0), 2};
    std::vector<double> params;
    std::function<double()> loss;
    std::function<void(std::span<double>)> analytic;
    std::vector<TargetInterval> targets(instances);
    // Targets straddle zero so some instances sit inside, some outside.
    for (auto& t : targets) {
      const double c = 2.0 * unit(rng);
      t = {c - 0.3 * (unit(rng) + 1.0), c + 0.3 * (unit(rng) + 1.0)};
      if (rng() % 5 == 0) t.lo = -std::numeric_limits<double>::infinity();
      if (rng() % 5 == 0) t.hi = std::numeric_limits<double>::infinity();
    }

    MlpModel mlp;
    RecurrentModel rec;
    std::vector<std::vector<double>> inputs(instances);
    if (kind == GradCheckKind::Mlp) {
      const std::size_t d = static_cast<std::size_t>(pick(1, 6));
      std::vector<std::size_t> hidden;
      for (int l = pick(1, 3); l > 0; --l) hidden.push_back(static_cast<std::size_t>(pick(1, 5)));
      mlp = init_mlp(d, hidden, rng(), unit(rng));
      for (auto& x : inputs) {
        x.resize(d);
        for (auto& v : x) v = 2.0 * unit(rng);
      }
      loss = [&] {
        double s = 0.0;
        for (std::size_t i = 0; i < instances; ++i) s += hinge_loss(mlp_forward(mlp, inputs[i]), targets[i], cfg);
        return s;
      };
      analytic = [&](std::span<double> g) {
        for (std::size_t i = 0; i < instances; ++i) mlp_loss_grad(mlp, inputs[i], targets[i], cfg, g);
      };
    } else {
      RecurrentArch arch;
      arch.cell = kind == GradCheckKind::Rnn ? CellKind::Rnn
                  : kind == GradCheckKind::Lstm ? CellKind::Lstm
                                                : CellKind::Gru;
      arch.layers = pick(1, 2);
      arch.hidden = pick(1, 4);
      rec = init_recurrent(arch, rng(), unit(rng));
      for (auto& p : rec.params) p *= 2.0;
      for (auto& x : inputs) {
        x.resize(static_cast<std::size_t>(pick(1, 20)));
        for (auto& v : x) v = 1.5 * unit(rng);
      }
      loss = [&] {
        double s = 0.0;
        for (std::size_t i = 0; i < instances; ++i)
          s += hinge_loss(recurrent_forward(rec, inputs[i]).log_lambda, targets[i], cfg);
        return s;
      };
      analytic = [&](std::span<double> g) {
        for (std::size_t i = 0; i < instances; ++i) recurrent_loss_grad(rec, inputs[i], targets[i], cfg, g);
      };
    }
    auto& theta = kind == GradCheckKind::Mlp ? mlp.params : rec.params;
    std::vector<double> grad(theta.size(), 0.0);
    analytic(grad);
    double diff_sq = 0.0, analytic_sq = 0.0, numeric_sq = 0.0;
    for (std::size_t p = 0; p < theta.size(); ++p) {
      const double keep = theta[p];
      theta[p] = keep + h;
      const double up = loss();
      theta[p] = keep - h;
      const double down = loss();
      theta[p] = keep;
      const double numeric = (up - down) / (2.0 * h);
      const double d = grad[p] - numeric;
      diff_sq += d * d;
      analytic_sq += grad[p] * grad[p];
      numeric_sq += numeric * numeric;
      report.max_absolute_error = std::max(report.max_absolute_error, std::abs(d));
      ++report.parameters_checked;
    }
    const double rel = std::sqrt(diff_sq) / std::max({std::sqrt(analytic_sq), std::sqrt(numeric_sq), 1e-6});
    report.max_relative_error = std::max(report.max_relative_error, rel);
  }
  report.passed = report.max_relative_error < tolerance;
  return report;
}

}  // namespace penlearn
