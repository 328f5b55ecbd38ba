#include <algorithm>
#include <cmath>
#include <mutex>
#include <random>
#include <set>

#include "doctest.h"
#include "penlearn/harness.hpp"
#include "penlearn/label_eval.hpp"
#include "penlearn/penalty_path.hpp"
#include "penlearn/segmenter.hpp"
#include "support/synthetic.hpp"
#include "support/temp_dir.hpp"

using namespace penlearn;

namespace {

ExperimentConfig quick_config() {
  ExperimentConfig cfg;
  cfg.dataset = "toy";
  cfg.models = {ModelFamily::Constant, ModelFamily::Bic, ModelFamily::Linear};
  cfg.l1_grid = {0.01, 1.0};
  cfg.n_folds = 3;
  cfg.train.max_iterations = 50;
  cfg.log1p = false;
  return cfg;
}

Dataset small_synthetic(std::size_t count, std::uint64_t seed) {
  testing::SyntheticSpec spec;
  spec.count = count;
  spec.max_length = 150;
  spec.seed = seed;
  return testing::make_synthetic(spec);
}

}  // namespace

TEST_CASE("config text parsing") {
  const auto cfg = ExperimentConfig::parse_text(
      "# comment\n"
      "dataset = demo\n"
      "sequences = seq.csv\n"
      "labels = \"/abs/labels.csv\"  # trailing\n"
      "models = [constant, linear, gru]\n"
      "l1_grid = 0.1, 1\n"
      "mlp_hidden = 4x2, 8\n"
      "recurrent_hidden = 3\n"
      "pool_stats = median\n"
      "log1p = false\n"
      "max_iterations = 7\n"
      "threads = 2\n",
      "/base");
  CHECK(cfg.dataset == "demo");
  CHECK(cfg.sequences == std::filesystem::path("/base/seq.csv"));
  CHECK(cfg.labels == std::filesystem::path("/abs/labels.csv"));
  CHECK(cfg.models == std::vector<ModelFamily>{ModelFamily::Constant, ModelFamily::Linear, ModelFamily::Gru});
  CHECK(cfg.l1_grid == std::vector<double>{0.1, 1.0});
  CHECK(cfg.mlp_hidden == std::vector<std::vector<std::size_t>>{{4, 2}, {8}});
  CHECK(cfg.recurrent_hidden == std::vector<int>{3});
  CHECK(cfg.pool_stats == std::vector<PoolStat>{PoolStat::Median});
  CHECK_FALSE(cfg.log1p);
  CHECK(cfg.train.max_iterations == 7);
  CHECK(cfg.threads == 2);

  CHECK_THROWS_AS(ExperimentConfig::parse_text("sequences = a\nlabels = b\nbogus = 1\n", "."), ParseError);
  CHECK_THROWS_AS(ExperimentConfig::parse_text("sequences = a\n", "."), DataError);
  CHECK_THROWS_AS(ExperimentConfig::parse_text("sequences = a\nlabels = b\nmodels = tree\n", "."), DataError);
  CHECK_THROWS_AS(ExperimentConfig::parse_text("sequences = a\nlabels = b\nn_folds = x\n", "."), DataError);
  CHECK_THROWS_AS(ExperimentConfig::parse_text("sequences = a\nlabels = b\nno equals sign\n", "."), ParseError);
}

TEST_CASE("hyperparameter grids") {
  ExperimentConfig cfg;
  cfg.recurrent_layers = {1, 2};
  cfg.recurrent_hidden = {2, 4, 8};
  cfg.pool_windows = {1, 5};
  CHECK(cfg.grid(ModelFamily::Gru).size() == 12);
  CHECK(cfg.grid(ModelFamily::Constant).size() == 1);
  cfg.l1_grid = {0.1, 0.2};
  CHECK(cfg.grid(ModelFamily::Linear).size() == 2);
  CHECK(cfg.grid(ModelFamily::Mlp).size() == cfg.mlp_hidden.size());
}

TEST_CASE("cross-validation selection") {
  // Pure-noise sequences whose targets are a band around 2 log sd; a small
  // l1 can follow the sd feature, a huge one is stuck at the bias.
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> log_sd(std::log(0.1), std::log(10.0));
  Dataset train;
  for (int i = 0; i < 60; ++i) {
    const double s = log_sd(rng);
    Sequence seq{"s" + std::to_string(i), std::vector<double>(100)};
    for (auto& v : seq.values) v = std::exp(s) * normal(rng);
    train.targets[seq.id] = {2.0 * s - 0.5, 2.0 * s + 0.5};
    train.sequences.push_back(std::move(seq));
  }
  ExperimentConfig cfg;
  cfg.train.max_iterations = 500;

  const std::vector<Hyperparams> one{Hyperparams{.l1 = 0.5}};
  CHECK(cross_validate(train, ModelFamily::Linear, one, 3, 1, cfg).best == 0);

  const std::vector<Hyperparams> grid{Hyperparams{.l1 = 1e6}, Hyperparams{.l1 = 0.01}};
  const auto a = cross_validate(train, ModelFamily::Linear, grid, 3, 9, cfg);
  CHECK(a.best == 1);
  CHECK(a.scores[1] < a.scores[0]);
  const auto b = cross_validate(train, ModelFamily::Linear, grid, 3, 9, cfg);
  CHECK(a.best == b.best);
  CHECK(a.scores == b.scores);
}

TEST_CASE("test ids never reach train-only stages") {
  const auto ds = small_synthetic(30, 11);
  auto cfg = quick_config();
  cfg.models.push_back(ModelFamily::Gru);
  cfg.recurrent_layers = {1};
  cfg.recurrent_hidden = {2};
  cfg.train.max_iterations = 10;
  const auto folds = generate_folds(ds, cfg.n_folds, cfg.seed);
  std::mutex mu;
  std::set<std::string> stages;
  int leaks = 0;
  run_experiment(cfg, ds, folds, [&](int fold, const std::string& stage, const std::vector<std::string>& ids) {
    std::lock_guard lock(mu);
    stages.insert(stage);
    for (const auto& id : ids)
      if (folds.fold.at(id) == fold) ++leaks;
  });
  CHECK(leaks == 0);
  CHECK(stages == std::set<std::string>{"targets", "normalization", "selection", "fit"});
}

TEST_CASE("results do not depend on the thread count") {
  const auto ds = small_synthetic(30, 12);
  auto cfg = quick_config();
  cfg.models.push_back(ModelFamily::Gru);
  cfg.recurrent_layers = {1};
  cfg.recurrent_hidden = {2, 3};
  cfg.train.max_iterations = 20;
  const auto folds = generate_folds(ds, cfg.n_folds, cfg.seed);
  const auto one = run_experiment(cfg, ds, folds);
  cfg.threads = 3;
  const auto three = run_experiment(cfg, ds, folds);
  REQUIRE(one.rows.size() == three.rows.size());
  for (std::size_t i = 0; i < one.rows.size(); ++i) {
    CHECK(one.rows[i].model == three.rows[i].model);
    CHECK(one.rows[i].hyperparams == three.rows[i].hyperparams);
    CHECK(one.rows[i].counts == three.rows[i].counts);
    CHECK(one.rows[i].error.empty());
  }
  REQUIRE(one.predictions.size() == three.predictions.size());
  for (std::size_t i = 0; i < one.predictions.size(); ++i)
    CHECK(one.predictions[i].log_lambda == three.predictions[i].log_lambda);
}

TEST_CASE("summary statistics match the rows") {
  const auto ds = small_synthetic(30, 13);
  auto cfg = quick_config();
  const auto res = run_experiment(cfg, ds, generate_folds(ds, cfg.n_folds, cfg.seed));
  CHECK(res.rows.size() == 9);
  CHECK(res.summary.size() == 3);
  for (const auto& s : res.summary) {
    std::vector<double> acc;
    for (const auto& r : res.rows)
      if (r.model == s.model) acc.push_back(r.accuracy);
    double mean = 0.0;
    for (double a : acc) mean += a / static_cast<double>(acc.size());
    double ss = 0.0;
    for (double a : acc) ss += (a - mean) * (a - mean);
    CHECK(s.folds == static_cast<int>(acc.size()));
    CHECK(s.mean_accuracy == doctest::Approx(mean).epsilon(1e-12));
    CHECK(s.sd_accuracy == doctest::Approx(std::sqrt(ss / static_cast<double>(acc.size() - 1))).epsilon(1e-12));
  }
  // Each row's counts agree with a direct evaluation of its predictions.
  for (const auto& r : res.rows) {
    ErrorCount c;
    for (const auto& p : res.predictions)
      if (p.fold == r.fold && p.model == r.model)
        c += count_errors(opart(ds.find(p.sequence_id)->values, std::exp(p.log_lambda)).changepoints,
                          ds.labels.at(p.sequence_id));
    CHECK(c == r.counts);
    CHECK(r.accuracy == doctest::Approx(accuracy(c)));
  }
}

TEST_CASE("constant model lands in the shared target region") {
  // Three sequences with the same step shape and noise level.
  Dataset ds;
  std::mt19937_64 rng(21);
  std::normal_distribution<double> normal(0.0, 0.5);
  for (int i = 0; i < 3; ++i) {
    Sequence s{"t" + std::to_string(i), {}};
    for (int j = 0; j < 60; ++j) s.values.push_back((j < 30 ? 0.0 : 4.0) + normal(rng));
    ds.labels[s.id] = {{25, 35, 1, 1}, {5, 20, 0, 0}, {40, 55, 0, 0}};
    ds.sequences.push_back(std::move(s));
  }
  ds.targets = compute_targets(ds);
  REQUIRE(ds.targets.size() == 3);
  double lo = -std::numeric_limits<double>::infinity(), hi = std::numeric_limits<double>::infinity();
  for (const auto& [id, t] : ds.targets) {
    lo = std::max(lo, t.lo);
    hi = std::min(hi, t.hi);
  }
  REQUIRE(lo < hi);
  ExperimentConfig cfg;
  const auto model = fit_family(ModelFamily::Constant, {}, ds, {"t0", "t1", "t2"}, cfg);
  REQUIRE(model);
  const double pred = predict_family_log(ModelFamily::Constant, model, ds.sequences[0].values);
  CHECK(pred >= lo);
  CHECK(pred <= hi);
  for (const auto& s : ds.sequences)
    CHECK(count_errors(opart(s.values, std::exp(pred)).changepoints, ds.labels.at(s.id)).errors() == 0);
}

TEST_CASE("a failing cell does not abort the others") {
  // Fold 1 trains on a single sequence: the linear grid cannot be
  // cross-validated there, while the constant model still fits.
  const auto ds = small_synthetic(10, 14);
  FoldAssignment folds;
  folds.n_folds = 2;
  for (std::size_t i = 0; i < ds.sequences.size(); ++i) folds.fold[ds.sequences[i].id] = i == 0 ? 2 : 1;
  auto cfg = quick_config();
  cfg.models = {ModelFamily::Constant, ModelFamily::Linear};
  const auto res = run_experiment(cfg, ds, folds);
  REQUIRE(res.rows.size() == 4);
  auto row = [&](int fold, const std::string& model) {
    return *std::find_if(res.rows.begin(), res.rows.end(),
                         [&](const ResultRow& r) { return r.fold == fold && r.model == model; });
  };
  CHECK(std::isnan(row(1, "linear").accuracy));
  CHECK_FALSE(row(1, "linear").error.empty());
  CHECK_FALSE(std::isnan(row(1, "constant").accuracy));
  CHECK_FALSE(std::isnan(row(2, "linear").accuracy));
  CHECK(std::any_of(res.log.begin(), res.log.end(), [](const std::string& l) { return l.find("failed") != std::string::npos; }));
}

TEST_CASE("experiment output files") {
  testing::TempDir dir;
  const auto ds = small_synthetic(20, 15);
  auto cfg = quick_config();
  cfg.output_dir = dir / "out";
  cfg.plot = true;
  const auto res = run_experiment(cfg, ds, generate_folds(ds, cfg.n_folds, cfg.seed));
  write_experiment(cfg, res);
  auto first_line = [&](const std::string& name) {
    const auto text = testing::read_file(cfg.output_dir / name);
    return text.substr(0, text.find('\n'));
  };
  CHECK(first_line("results.csv") == "dataset,fold,model,hyperparams,accuracy,tp,tn,fp,fn,seconds");
  CHECK(first_line("summary.csv") == "dataset,model,mean_accuracy,sd_accuracy");
  CHECK(first_line("predictions.csv") == "fold,model,sequenceID,log_lambda");
  CHECK(first_line("accuracy_long.csv") == "dataset,model,fold,accuracy");
  CHECK(std::filesystem::exists(cfg.output_dir / "experiment.log"));
  const auto results = testing::read_file(cfg.output_dir / "results.csv");
  CHECK(std::count(results.begin(), results.end(), '\n') == 1 + static_cast<long>(res.rows.size()));
}

TEST_CASE("parallel_for fills every slot") {
  for (int threads : {1, 2, 7}) {
    std::vector<int> out(50, -1);
    parallel_for(out.size(), threads, [&](std::size_t i) { out[i] = static_cast<int>(i * i); });
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == static_cast<int>(i * i));
  }
}
