#include "penlearn/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include "csv.hpp"
#include "penlearn/label_eval.hpp"
#include "penlearn/penalty_path.hpp"
#include "penlearn/segmenter.hpp"

namespace penlearn {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct FamilyName {
  ModelFamily family;
  const char* name;
};

constexpr FamilyName kFamilies[] = {
    {ModelFamily::Constant, "constant"}, {ModelFamily::Bic, "bic"},       {ModelFamily::AicSd, "aic_sd"},
    {ModelFamily::AicVariance, "aic_variance"}, {ModelFamily::Linear, "linear"}, {ModelFamily::Mlp, "mlp"},
    {ModelFamily::Rnn, "rnn"},           {ModelFamily::Lstm, "lstm"},     {ModelFamily::Gru, "gru"},
};

CellKind cell_of(ModelFamily f) {
  switch (f) {
    case ModelFamily::Rnn:
      return CellKind::Rnn;
    case ModelFamily::Lstm:
      return CellKind::Lstm;
    default:
      return CellKind::Gru;
  }
}

std::string short_double(double x) {
  std::ostringstream ss;
  ss.precision(6);
  ss << x;
  return ss.str();
}

}  // namespace

std::string to_string(ModelFamily family) {
  for (const auto& f : kFamilies)
    if (f.family == family) return f.name;
  return "?";
}

ModelFamily parse_model_family(const std::string& name) {
  for (const auto& f : kFamilies)
    if (name == f.name) return f.family;
  throw std::invalid_argument("unknown model '" + name +
                              "' (constant|bic|aic_sd|aic_variance|linear|mlp|rnn|lstm|gru)");
}

bool is_recurrent(ModelFamily family) {
  return family == ModelFamily::Rnn || family == ModelFamily::Lstm || family == ModelFamily::Gru;
}

std::string Hyperparams::describe(ModelFamily family) const {
  switch (family) {
    case ModelFamily::Linear:
      return "l1=" + short_double(l1);
    case ModelFamily::Mlp: {
      std::string s = "hidden=";
      for (std::size_t k = 0; k < mlp_hidden.size(); ++k) s += (k ? "x" : "") + std::to_string(mlp_hidden[k]);
      return s;
    }
    case ModelFamily::Rnn:
    case ModelFamily::Lstm:
    case ModelFamily::Gru:
      return "layers=" + std::to_string(arch.layers) + ";hidden=" + std::to_string(arch.hidden) +
             ";pool=" + std::to_string(pool_window) + ";stat=" + to_string(pool_stat);
    default:
      return "";
  }
}

// ---------------------------------------------------------------------------
// Config file

namespace {

std::vector<std::string> split_list(std::string_view v) {
  std::vector<std::string_view> parts;
  csv::split(v, parts);
  std::vector<std::string> out;
  for (auto p : parts) {
    auto t = csv::trim(p);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw DataError("config key '" + key + "' expects true|false, got '" + v + "'");
}

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    T out{};
    if constexpr (std::is_floating_point_v<T>)
      out = static_cast<T>(std::stod(v, &used));
    else
      out = static_cast<T>(std::stoll(v, &used));
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw DataError("config key '" + key + "' has an invalid number '" + v + "'");
  }
}

template <typename T>
std::vector<T> parse_numbers(const std::string& key, const std::string& v) {
  std::vector<T> out;
  for (const auto& p : split_list(v)) out.push_back(parse_number<T>(key, p));
  if (out.empty()) throw DataError("config key '" + key + "' needs a nonempty list");
  return out;
}

}  // namespace

ExperimentConfig ExperimentConfig::parse_text(const std::string& text, const std::filesystem::path& base_dir) {
  ExperimentConfig cfg;
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  };
  std::istringstream in(text);
  std::string raw;
  std::size_t line = 0;
  bool have_sequences = false, have_labels = false;
  while (std::getline(in, raw)) {
    ++line;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    auto t = csv::trim(raw);
    if (t.empty()) continue;
    auto eq = t.find('=');
    if (eq == std::string_view::npos) throw ParseError("config: expected key = value", line);
    std::string key(csv::trim(t.substr(0, eq)));
    std::string value(csv::trim(t.substr(eq + 1)));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    if (value.size() >= 2 && value.front() == '[' && value.back() == ']') value = value.substr(1, value.size() - 2);
    std::erase(value, '"');

    if (key == "dataset") cfg.dataset = value;
    else if (key == "sequences") { cfg.sequences = resolve(value); have_sequences = true; }
    else if (key == "labels") { cfg.labels = resolve(value); have_labels = true; }
    else if (key == "folds") cfg.folds = resolve(value);
    else if (key == "n_folds") cfg.n_folds = parse_number<int>(key, value);
    else if (key == "seed") cfg.seed = parse_number<std::uint64_t>(key, value);
    else if (key == "models") {
      cfg.models.clear();
      for (const auto& m : split_list(value)) {
        try {
          cfg.models.push_back(parse_model_family(m));
        } catch (const std::invalid_argument& e) {
          throw DataError(e.what());
        }
      }
    } else if (key == "l1_grid") {
      cfg.l1_grid = value == "auto" ? std::vector<double>{} : parse_numbers<double>(key, value);
    } else if (key == "mlp_hidden") {
      cfg.mlp_hidden.clear();
      for (const auto& arch : split_list(value)) {
        std::vector<std::size_t> sizes;
        std::istringstream parts(arch);
        std::string part;
        while (std::getline(parts, part, 'x')) sizes.push_back(parse_number<std::size_t>(key, part));
        cfg.mlp_hidden.push_back(sizes);
      }
    } else if (key == "recurrent_layers") cfg.recurrent_layers = parse_numbers<int>(key, value);
    else if (key == "recurrent_hidden") cfg.recurrent_hidden = parse_numbers<int>(key, value);
    else if (key == "pool_windows") cfg.pool_windows = parse_numbers<std::size_t>(key, value);
    else if (key == "pool_stats") {
      cfg.pool_stats.clear();
      for (const auto& s : split_list(value)) {
        try {
          cfg.pool_stats.push_back(parse_pool_stat(s));
        } catch (const std::invalid_argument& e) {
          throw DataError(e.what());
        }
      }
    } else if (key == "log1p") cfg.log1p = parse_bool(key, value);
    else if (key == "inner_folds") cfg.inner_folds = parse_number<int>(key, value);
    else if (key == "max_iterations") cfg.train.max_iterations = parse_number<int>(key, value);
    else if (key == "step_size") cfg.train.step_size = parse_number<double>(key, value);
    else if (key == "patience") cfg.train.patience = parse_number<int>(key, value);
    else if (key == "validation_fraction") cfg.train.validation_fraction = parse_number<double>(key, value);
    else if (key == "batch_size") cfg.train.batch_size = parse_number<std::size_t>(key, value);
    else if (key == "full_batch_points") cfg.train.full_batch_points = parse_number<std::size_t>(key, value);
    else if (key == "loss_margin") cfg.train.loss.margin = parse_number<double>(key, value);
    else if (key == "loss_power") cfg.train.loss.power = parse_number<int>(key, value);
    else if (key == "train_seed") cfg.train.seed = parse_number<std::uint64_t>(key, value);
    else if (key == "output_dir") cfg.output_dir = resolve(value);
    else if (key == "threads") cfg.threads = parse_number<int>(key, value);
    else if (key == "plot") cfg.plot = parse_bool(key, value);
    else if (key == "record_timing") cfg.record_timing = parse_bool(key, value);
    else throw ParseError("config: unknown key '" + key + "'", line);
  }
  if (!have_sequences || !have_labels) throw DataError("config must set both 'sequences' and 'labels'");
  if (cfg.models.empty()) throw DataError("config: model roster is empty");
  if (cfg.mlp_hidden.empty() || cfg.recurrent_layers.empty() || cfg.recurrent_hidden.empty() ||
      cfg.pool_windows.empty() || cfg.pool_stats.empty())
    throw DataError("config: hyperparameter grids must be nonempty");
  if (cfg.inner_folds < 2) throw DataError("config: inner_folds must be >= 2");
  try {
    cfg.train.loss.validate();
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("config: ") + e.what());
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::parse(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  auto cfg = parse_text(ss.str(), path.parent_path());
  for (const auto* p : {&cfg.sequences, &cfg.labels})
    if (!std::filesystem::exists(*p)) throw DataError("config references missing file " + p->string());
  if (cfg.folds && !std::filesystem::exists(*cfg.folds))
    throw DataError("config references missing file " + cfg.folds->string());
  return cfg;
}

std::vector<Hyperparams> ExperimentConfig::grid(ModelFamily family) const {
  std::vector<Hyperparams> out;
  switch (family) {
    case ModelFamily::Linear:
      for (double l1 : l1_grid) out.push_back(Hyperparams{.l1 = l1});
      break;
    case ModelFamily::Mlp:
      for (const auto& h : mlp_hidden) out.push_back(Hyperparams{.mlp_hidden = h});
      break;
    case ModelFamily::Rnn:
    case ModelFamily::Lstm:
    case ModelFamily::Gru:
      for (auto w : pool_windows)
        for (auto st : pool_stats)
          for (int l : recurrent_layers)
            for (int h : recurrent_hidden) {
              Hyperparams hp;
              hp.arch = {cell_of(family), l, h};
              hp.pool_window = w;
              hp.pool_stat = st;
              out.push_back(hp);
            }
      break;
    default:
      out.emplace_back();
  }
  return out;
}

// ---------------------------------------------------------------------------

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& job) {
  const std::size_t workers = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, threads)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          job(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

namespace {

std::vector<TargetInterval> targets_of(const Dataset& d, const std::vector<std::string>& ids) {
  std::vector<TargetInterval> t;
  for (const auto& id : ids) t.push_back(d.targets.at(id));
  return t;
}

std::vector<FeatureVector> features_of(const Dataset& d, const std::vector<std::string>& ids) {
  std::vector<FeatureVector> f;
  for (const auto& id : ids) f.push_back(extract_features(d.find(id)->values));
  return f;
}

std::vector<std::string> ids_with_targets(const Dataset& d) {
  std::vector<std::string> ids;
  for (const auto& [id, t] : d.targets)
    if (d.find(id)) ids.push_back(id);
  return ids;
}

double clip_log(double v, bool* clipped) {
  const double c = std::isnan(v) ? 0.0 : std::clamp(v, -kLogLambdaClip, kLogLambdaClip);
  if (clipped) *clipped = c != v;
  return c;
}

}  // namespace

std::optional<LearnerModel> fit_family(ModelFamily family, const Hyperparams& hp, const Dataset& train,
                                       const std::vector<std::string>& ids, const ExperimentConfig& cfg,
                                       const AuditHook& audit, int outer_fold) {
  if (ids.empty()) throw DataError("empty training set");
  if (audit) audit(outer_fold, "fit", ids);
  const auto targets = targets_of(train, ids);
  switch (family) {
    case ModelFamily::Bic:
    case ModelFamily::AicSd:
    case ModelFamily::AicVariance:
      return std::nullopt;
    case ModelFamily::Constant:
      return fit_constant(targets, cfg.train.loss);
    case ModelFamily::Linear:
      return fit_linear_fista(features_of(train, ids), targets, hp.l1, cfg.train);
    case ModelFamily::Mlp:
      return fit_mlp(features_of(train, ids), targets, hp.mlp_hidden, cfg.train);
    case ModelFamily::Rnn:
    case ModelFamily::Lstm:
    case ModelFamily::Gru: {
      SequencePreprocessing pre;
      pre.pool_window = hp.pool_window;
      pre.pool_stat = hp.pool_stat;
      Dataset pooled;
      for (const auto& id : ids) pooled.sequences.push_back({id, pool(train.find(id)->values, hp.pool_window, hp.pool_stat)});
      if (audit) audit(outer_fold, "normalization", ids);
      auto [normalized, stats] = log1p_normalize(pooled, std::nullopt, cfg.log1p);
      pre.normalization = stats;
      std::vector<std::vector<double>> seqs;
      for (auto& s : normalized.sequences) seqs.push_back(std::move(s.values));
      return fit_recurrent(seqs, targets, hp.arch, cfg.train, pre);
    }
  }
  return std::nullopt;
}

double predict_family_log(ModelFamily family, const std::optional<LearnerModel>& model,
                          std::span<const double> raw_values) {
  switch (family) {
    case ModelFamily::Bic:
      return std::log(bic_penalty(raw_values));
    case ModelFamily::AicSd:
      return std::log(aic_penalty(raw_values, AicFeature::Sd));
    case ModelFamily::AicVariance:
      return std::log(aic_penalty(raw_values, AicFeature::Variance));
    default:
      break;
  }
  if (!model) throw std::logic_error("supervised family without a fitted model");
  if (expects_features(*model)) return predict_log(*model, extract_features(raw_values));
  return predict_log(*model, raw_values);
}

namespace {

double score_grid_point(const Dataset& train, ModelFamily family, const Hyperparams& hp,
                        const FoldAssignment& inner, const ExperimentConfig& cfg, const AuditHook& audit,
                        int outer_fold) {
  double total = 0.0;
  for (int k = 1; k <= inner.n_folds; ++k) {
    const auto fit_ids = inner.ids_not_in(k);
    const auto val_ids = inner.ids_in(k);
    try {
      auto model = fit_family(family, hp, train, fit_ids, cfg, audit, outer_fold);
      double loss = 0.0;
      for (const auto& id : val_ids)
        loss += hinge_loss(predict_family_log(family, model, train.find(id)->values), train.targets.at(id),
                           cfg.train.loss);
      total += loss / static_cast<double>(val_ids.size());
    } catch (const std::exception&) {
      return std::numeric_limits<double>::infinity();
    }
  }
  return total / static_cast<double>(inner.n_folds);
}

FoldAssignment inner_folds_for(const Dataset& train, int inner_folds, std::uint64_t seed) {
  auto ids = ids_with_targets(train);
  if (ids.size() < static_cast<std::size_t>(std::max(2, inner_folds)))
    throw DataError("degenerate split: " + std::to_string(ids.size()) + " training sequences for " +
                    std::to_string(inner_folds) + " inner folds");
  return generate_folds(ids, inner_folds, seed);
}

CvResult argmin_scores(std::vector<double> scores) {
  CvResult r;
  r.scores = std::move(scores);
  for (std::size_t g = 1; g < r.scores.size(); ++g)
    if (r.scores[g] < r.scores[r.best]) r.best = g;
  return r;
}

}  // namespace

CvResult cross_validate(const Dataset& train, ModelFamily family, const std::vector<Hyperparams>& grid,
                        int inner_folds, std::uint64_t seed, const ExperimentConfig& cfg,
                        const AuditHook& audit, int outer_fold) {
  if (grid.empty()) throw std::invalid_argument("empty hyperparameter grid");
  if (inner_folds < 2) throw DataError("inner folds must be >= 2");
  if (grid.size() == 1) return {0, {kNaN}};
  const auto inner = inner_folds_for(train, inner_folds, seed);
  if (audit) audit(outer_fold, "selection", ids_with_targets(train));
  std::vector<double> scores;
  for (const auto& hp : grid) scores.push_back(score_grid_point(train, family, hp, inner, cfg, audit, outer_fold));
  return argmin_scores(std::move(scores));
}

// ---------------------------------------------------------------------------

ExperimentResult run_experiment(const ExperimentConfig& cfg, const AuditHook& audit) {
  auto dataset = load_labels(cfg.labels, load_sequences(cfg.sequences));
  const auto folds = cfg.folds ? load_folds(*cfg.folds) : generate_folds(dataset, cfg.n_folds, cfg.seed);
  auto result = run_experiment(cfg, dataset, folds, audit);
  result.log.insert(result.log.begin(), dataset.warnings.begin(), dataset.warnings.end());
  return result;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const Dataset& dataset,
                                const FoldAssignment& folds, const AuditHook& audit) {
  using Clock = std::chrono::steady_clock;
  const int n_folds = folds.n_folds;
  const std::size_t n_models = cfg.models.size();

  struct FoldData {
    Dataset train;
    std::vector<std::string> train_ids;
    std::vector<std::string> test_ids;
    std::map<ModelFamily, std::vector<Hyperparams>> grids;
    std::optional<FoldAssignment> inner;
    std::vector<std::string> log;
  };
  std::vector<FoldData> fd(static_cast<std::size_t>(n_folds));

  // Targets, grids and inner folds from train sequences only.
  parallel_for(fd.size(), cfg.threads, [&](std::size_t k) {
    const int f = static_cast<int>(k) + 1;
    auto& d = fd[k];
    std::vector<std::string> train_ids;
    for (const auto& id : folds.ids_not_in(f))
      if (dataset.has_labels(id) && dataset.find(id)) train_ids.push_back(id);
    for (const auto& id : folds.ids_in(f))
      if (dataset.find(id)) d.test_ids.push_back(id);
    if (audit) audit(f, "targets", train_ids);
    d.train = dataset.subset(train_ids);
    std::vector<std::string> skipped;
    d.train.targets = compute_targets(d.train, &skipped);
    for (const auto& s : skipped) d.log.push_back("fold " + std::to_string(f) + ": excluded " + s);
    d.train_ids = ids_with_targets(d.train);
    for (auto family : cfg.models) {
      auto grid = cfg.grid(family);
      if (family == ModelFamily::Linear && cfg.l1_grid.empty()) {
        try {
          grid.clear();
          for (double l1 : linear_l1_grid(features_of(d.train, d.train_ids), targets_of(d.train, d.train_ids), cfg.train))
            grid.push_back(Hyperparams{.l1 = l1});
        } catch (const std::exception& e) {
          d.log.push_back("fold " + std::to_string(f) + ": linear l1 grid failed: " + e.what());
          grid = {Hyperparams{.l1 = 0.001}};
        }
      }
      d.grids[family] = std::move(grid);
    }
    try {
      d.inner = inner_folds_for(d.train, cfg.inner_folds, cfg.seed + static_cast<std::uint64_t>(f));
    } catch (const std::exception& e) {
      d.log.push_back("fold " + std::to_string(f) + ": " + e.what());
    }
  });

  // Cross-validation scores, one job per (fold, model, grid point).
  struct ScoreJob {
    std::size_t fold, model, point;
  };
  std::vector<ScoreJob> score_jobs;
  std::vector<std::vector<std::vector<double>>> scores(fd.size(), std::vector<std::vector<double>>(n_models));
  std::vector<std::vector<double>> cv_seconds(fd.size(), std::vector<double>(n_models, 0.0));
  for (std::size_t k = 0; k < fd.size(); ++k)
    for (std::size_t m = 0; m < n_models; ++m) {
      const auto& grid = fd[k].grids[cfg.models[m]];
      scores[k][m].assign(grid.size(), kNaN);
      if (grid.size() > 1 && fd[k].inner)
        for (std::size_t g = 0; g < grid.size(); ++g) score_jobs.push_back({k, m, g});
    }
  std::vector<double> score_seconds(score_jobs.size(), 0.0);
  for (std::size_t k = 0; k < fd.size(); ++k)
    for (std::size_t m = 0; m < n_models; ++m)
      if (fd[k].grids[cfg.models[m]].size() > 1 && fd[k].inner && audit)
        audit(static_cast<int>(k) + 1, "selection", fd[k].train_ids);
  parallel_for(score_jobs.size(), cfg.threads, [&](std::size_t j) {
    const auto& job = score_jobs[j];
    const auto start = Clock::now();
    const auto family = cfg.models[job.model];
    scores[job.fold][job.model][job.point] =
        score_grid_point(fd[job.fold].train, family, fd[job.fold].grids.at(family)[job.point], *fd[job.fold].inner,
                         cfg, audit, static_cast<int>(job.fold) + 1);
    score_seconds[j] = std::chrono::duration<double>(Clock::now() - start).count();
  });
  for (std::size_t j = 0; j < score_jobs.size(); ++j)
    cv_seconds[score_jobs[j].fold][score_jobs[j].model] += score_seconds[j];

  // Final fit on the full train split, then test-set scoring.
  struct Cell {
    ResultRow row;
    std::vector<PredictionRow> predictions;
    std::vector<std::string> log;
  };
  std::vector<Cell> cells(fd.size() * n_models);
  parallel_for(cells.size(), cfg.threads, [&](std::size_t c) {
    const std::size_t k = c / n_models, m = c % n_models;
    const int f = static_cast<int>(k) + 1;
    const auto family = cfg.models[m];
    auto& cell = cells[c];
    auto& row = cell.row;
    row.dataset = cfg.dataset;
    row.fold = f;
    row.model = to_string(family);
    const auto start = Clock::now();
    try {
      const auto& d = fd[k];
      const auto& grid = d.grids.at(family);
      std::size_t best = 0;
      if (grid.size() > 1) {
        if (!d.inner) throw DataError("cross-validation impossible: too few training sequences");
        best = argmin_scores(scores[k][m]).best;
        if (std::isinf(scores[k][m][best])) throw DataError("every grid point failed during cross-validation");
      }
      const auto& hp = grid[best];
      row.hyperparams = hp.describe(family);
      std::optional<LearnerModel> model;
      const bool supervised = !(family == ModelFamily::Bic || family == ModelFamily::AicSd ||
                                family == ModelFamily::AicVariance);
      if (supervised) model = fit_family(family, hp, d.train, d.train_ids, cfg, audit, f);
      for (const auto& id : d.test_ids) {
        const auto& values = dataset.find(id)->values;
        bool clipped = false;
        const double log_lambda = clip_log(predict_family_log(family, model, values), &clipped);
        if (clipped) cell.log.push_back("fold " + std::to_string(f) + " " + row.model + ": clipped log-penalty for " + id);
        cell.predictions.push_back({f, row.model, id, log_lambda});
        auto it = dataset.labels.find(id);
        if (it == dataset.labels.end() || it->second.empty()) continue;
        row.counts += count_errors(opart(values, std::exp(log_lambda)).changepoints, it->second);
      }
      row.accuracy = accuracy(row.counts);
    } catch (const std::exception& e) {
      row.accuracy = kNaN;
      row.error = e.what();
      cell.log.push_back("fold " + std::to_string(f) + " " + row.model + ": failed: " + e.what());
    }
    row.seconds = std::chrono::duration<double>(Clock::now() - start).count() + cv_seconds[k][m];
  });

  ExperimentResult result;
  for (const auto& d : fd) result.log.insert(result.log.end(), d.log.begin(), d.log.end());
  for (auto& cell : cells) {
    result.rows.push_back(cell.row);
    result.predictions.insert(result.predictions.end(), cell.predictions.begin(), cell.predictions.end());
    result.log.insert(result.log.end(), cell.log.begin(), cell.log.end());
  }
  result.summary = summarize(result.rows);
  return result;
}

std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows) {
  std::vector<SummaryRow> out;
  for (const auto& r : rows) {
    auto it = std::find_if(out.begin(), out.end(),
                           [&](const SummaryRow& s) { return s.dataset == r.dataset && s.model == r.model; });
    if (it == out.end()) {
      out.push_back({r.dataset, r.model, 0.0, 0.0, 0});
      it = std::prev(out.end());
    }
  }
  for (auto& s : out) {
    std::vector<double> acc;
    for (const auto& r : rows)
      if (r.dataset == s.dataset && r.model == s.model && !std::isnan(r.accuracy)) acc.push_back(r.accuracy);
    s.folds = static_cast<int>(acc.size());
    if (acc.empty()) {
      s.mean_accuracy = s.sd_accuracy = kNaN;
      continue;
    }
    s.mean_accuracy = std::accumulate(acc.begin(), acc.end(), 0.0) / static_cast<double>(acc.size());
    double ss = 0.0;
    for (double a : acc) ss += (a - s.mean_accuracy) * (a - s.mean_accuracy);
    s.sd_accuracy = acc.size() > 1 ? std::sqrt(ss / static_cast<double>(acc.size() - 1)) : 0.0;
  }
  return out;
}

void write_experiment(const ExperimentConfig& cfg, const ExperimentResult& result) {
  std::filesystem::create_directories(cfg.output_dir);
  auto open = [&](const char* name) {
    std::ofstream out(cfg.output_dir / name);
    if (!out) throw DataError("cannot write " + (cfg.output_dir / name).string());
    return out;
  };
  auto num = [](double x) { return std::isnan(x) ? std::string("NA") : format_double(x); };
  {
    auto out = open("results.csv");
    out << "dataset,fold,model,hyperparams,accuracy,tp,tn,fp,fn,seconds\n";
    for (const auto& r : result.rows)
      out << r.dataset << ',' << r.fold << ',' << r.model << ',' << r.hyperparams << ',' << num(r.accuracy) << ','
          << r.counts.tp << ',' << r.counts.tn << ',' << r.counts.fp << ',' << r.counts.fn << ','
          << (cfg.record_timing ? format_double(r.seconds) : std::string("NA")) << '\n';
  }
  {
    auto out = open("summary.csv");
    out << "dataset,model,mean_accuracy,sd_accuracy\n";
    for (const auto& s : result.summary)
      out << s.dataset << ',' << s.model << ',' << num(s.mean_accuracy) << ',' << num(s.sd_accuracy) << '\n';
  }
  {
    auto out = open("predictions.csv");
    out << "fold,model,sequenceID,log_lambda\n";
    for (const auto& p : result.predictions)
      out << p.fold << ',' << p.model << ',' << p.sequence_id << ',' << format_double(p.log_lambda) << '\n';
  }
  {
    auto out = open("experiment.log");
    for (const auto& l : result.log) out << l << '\n';
  }
  if (cfg.plot) {
    auto out = open("accuracy_long.csv");
    out << "dataset,model,fold,accuracy\n";
    for (const auto& r : result.rows)
      out << r.dataset << ',' << r.model << ',' << r.fold << ',' << num(r.accuracy) << '\n';
  }
}

}  // namespace penlearn
