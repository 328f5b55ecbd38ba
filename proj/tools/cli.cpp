#include "cli.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "penlearn/data_model.hpp"
#include "penlearn/featurizer.hpp"
#include "penlearn/harness.hpp"
#include "penlearn/label_eval.hpp"
#include "penlearn/learners.hpp"
#include "penlearn/model_io.hpp"
#include "penlearn/penalty_path.hpp"
#include "penlearn/segmenter.hpp"
#include "../src/csv.hpp"

namespace penlearn {

namespace {

namespace fs = std::filesystem;

struct Globals {
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> output_dir;

  fs::path out_path(const std::string& explicit_path, const std::string& default_name) const {
    if (!explicit_path.empty()) return explicit_path;
    return fs::path(output_dir.value_or(".")) / default_name;
  }
};

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

// predictions.csv written by `predict`: sequenceID,log_lambda,lambda
std::map<std::string, double> load_predictions(const fs::path& path) {
  csv::Reader reader(path, {"sequenceID", "log_lambda", "lambda"});
  std::map<std::string, double> out;
  std::vector<std::string_view> row;
  while (reader.next(row)) {
    try {
      out[std::string(csv::trim(row[0]))] = parse_double(row[1]);
    } catch (const std::invalid_argument& e) {
      throw ParseError(path.string() + ": " + e.what(), reader.line());
    }
  }
  return out;
}

// Penalty per sequence: either one global value or a predictions file.
struct PenaltySource {
  std::optional<double> lambda;
  std::string predictions;

  std::function<double(const std::string&)> resolve() const {
    if (lambda && !predictions.empty()) throw CLI::ValidationError("use either --lambda or --predictions");
    if (lambda) {
      const double l = *lambda;
      return [l](const std::string&) { return l; };
    }
    if (predictions.empty()) throw CLI::ValidationError("one of --lambda or --predictions is required");
    auto table = std::make_shared<std::map<std::string, double>>(load_predictions(predictions));
    return [table](const std::string& id) {
      auto it = table->find(id);
      if (it == table->end()) throw DataError("no prediction for sequence '" + id + "'");
      return std::exp(std::clamp(it->second, -kLogLambdaClip, kLogLambdaClip));
    };
  }
};

Segmentation run_solver(const std::string& method, std::span<const double> values, double lambda) {
  if (method == "pelt") return pelt(values, lambda);
  return opart(values, lambda);
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Penalty learning for optimal-partitioning changepoint detection"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "random seed");
  app.add_option("--threads", g.threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--output-dir", g.output_dir, "directory for default output files");

  // segment
  auto* seg = app.add_subcommand("segment", "optimal partitioning of every sequence");
  std::string seg_sequences, seg_out, seg_method = "opart";
  PenaltySource seg_pen;
  seg->add_option("--sequences", seg_sequences, "sequences.csv")->required();
  seg->add_option("--lambda", seg_pen.lambda, "penalty for every sequence")->check(CLI::NonNegativeNumber);
  seg->add_option("--predictions", seg_pen.predictions, "per-sequence penalties from `predict`");
  seg->add_option("--method", seg_method, "opart|pelt")->check(CLI::IsMember({"opart", "pelt"}));
  seg->add_option("--out", seg_out, "output CSV (default changepoints.csv)");

  // targets
  auto* tgt = app.add_subcommand("targets", "target log-penalty intervals from labels");
  std::string tgt_sequences, tgt_labels, tgt_out;
  tgt->add_option("--sequences", tgt_sequences)->required();
  tgt->add_option("--labels", tgt_labels)->required();
  tgt->add_option("--out", tgt_out, "output CSV (default targets.csv)");

  // features
  auto* feat = app.add_subcommand("features", "365 manual sequence features");
  std::string feat_sequences, feat_out;
  feat->add_option("--sequences", feat_sequences)->required();
  feat->add_option("--out", feat_out, "output CSV (default features.csv)");

  // pool
  auto* pl = app.add_subcommand("pool", "non-overlapping window pooling");
  std::string pl_sequences, pl_out, pl_stat = "mean";
  std::size_t pl_window = 1;
  pl->add_option("--sequences", pl_sequences)->required();
  pl->add_option("--window", pl_window)->required()->check(CLI::PositiveNumber);
  pl->add_option("--stat", pl_stat)->check(CLI::IsMember({"mean", "median"}));
  pl->add_option("--out", pl_out, "output CSV (default pooled.csv)");

  // train
  auto* tr = app.add_subcommand("train", "fit one penalty model");
  std::string tr_kind, tr_sequences, tr_labels, tr_targets, tr_out, tr_pool_stat = "mean";
  std::optional<double> tr_l1;
  std::vector<std::size_t> tr_hidden;
  int tr_layers = 1;
  std::size_t tr_pool_window = 1;
  bool tr_no_log1p = false;
  TrainConfig tr_cfg;
  tr->add_option("--model", tr_kind, "constant|linear|mlp|rnn|lstm|gru")
      ->required()
      ->check(CLI::IsMember({"constant", "linear", "mlp", "rnn", "lstm", "gru"}));
  tr->add_option("--sequences", tr_sequences)->required();
  tr->add_option("--labels", tr_labels)->required();
  tr->add_option("--targets", tr_targets, "precomputed targets.csv");
  tr->add_option("--l1", tr_l1, "linear L1 penalty (default: cross-validated grid)");
  tr->add_option("--hidden", tr_hidden, "MLP hidden sizes or recurrent hidden size");
  tr->add_option("--layers", tr_layers, "recurrent layers (1 or 2)");
  tr->add_option("--pool-window", tr_pool_window)->check(CLI::PositiveNumber);
  tr->add_option("--pool-stat", tr_pool_stat)->check(CLI::IsMember({"mean", "median"}));
  tr->add_flag("--no-log1p", tr_no_log1p, "skip log(z+1) before normalisation");
  tr->add_option("--max-iterations", tr_cfg.max_iterations);
  tr->add_option("--step-size", tr_cfg.step_size);
  tr->add_option("--patience", tr_cfg.patience);
  tr->add_option("--margin", tr_cfg.loss.margin);
  tr->add_option("--power", tr_cfg.loss.power)->check(CLI::IsMember({1, 2}));
  tr->add_option("--out", tr_out, "model JSON (default model.json)");

  // predict
  auto* pr = app.add_subcommand("predict", "predict penalties with a saved model");
  std::string pr_model, pr_sequences, pr_features, pr_out;
  pr->add_option("--model", pr_model)->required();
  pr->add_option("--sequences", pr_sequences, "raw sequences input");
  pr->add_option("--features", pr_features, "features.csv input");
  pr->add_option("--out", pr_out, "output CSV (default predictions.csv)");

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "label errors of segmentations");
  std::string ev_sequences, ev_labels, ev_out, ev_method = "opart";
  PenaltySource ev_pen;
  ev->add_option("--sequences", ev_sequences)->required();
  ev->add_option("--labels", ev_labels)->required();
  ev->add_option("--lambda", ev_pen.lambda)->check(CLI::NonNegativeNumber);
  ev->add_option("--predictions", ev_pen.predictions);
  ev->add_option("--method", ev_method)->check(CLI::IsMember({"opart", "pelt"}));
  ev->add_option("--out", ev_out, "output CSV (default evaluation.csv)");

  // experiment
  auto* ex = app.add_subcommand("experiment", "fold-wise train/test over a model roster");
  std::string ex_config;
  bool ex_plot = false;
  ex->add_option("--config", ex_config)->required();
  ex->add_flag("--plot", ex_plot, "also write accuracy_long.csv");

  // gradcheck
  auto* gc = app.add_subcommand("gradcheck", "analytic vs finite-difference gradients");
  std::string gc_kind = "gru";
  std::size_t gc_trials = 20;
  double gc_tol = 1e-4;
  gc->add_option("--kind", gc_kind)->check(CLI::IsMember({"mlp", "rnn", "lstm", "gru"}));
  gc->add_option("--trials", gc_trials);
  gc->add_option("--tolerance", gc_tol);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (seg->parsed()) {
      auto penalty = seg_pen.resolve();
      auto ds = load_sequences(seg_sequences);
      auto o = open_out(g.out_path(seg_out, "changepoints.csv"));
      o << "sequenceID,changepoint\n";
      for (const auto& s : ds.sequences)
        for (auto t : run_solver(seg_method, s.values, penalty(s.id)).changepoints) o << s.id << ',' << t << '\n';
    } else if (tgt->parsed()) {
      auto ds = load_labels(tgt_labels, load_sequences(tgt_sequences));
      for (const auto& w : ds.warnings) err << "warning: " << w << '\n';
      std::vector<std::string> skipped;
      auto targets = compute_targets(ds, &skipped);
      for (const auto& s : skipped) err << "skipped " << s << '\n';
      write_targets(g.out_path(tgt_out, "targets.csv"), targets);
    } else if (feat->parsed()) {
      auto ds = load_sequences(feat_sequences);
      std::vector<std::string> ids;
      std::vector<FeatureVector> fvs;
      for (const auto& s : ds.sequences) {
        ids.push_back(s.id);
        fvs.push_back(extract_features(s.values));
      }
      write_features(g.out_path(feat_out, "features.csv"), ids, fvs);
    } else if (pl->parsed()) {
      auto ds = load_sequences(pl_sequences);
      for (auto& s : ds.sequences) s.values = pool(s.values, pl_window, parse_pool_stat(pl_stat));
      write_sequences(g.out_path(pl_out, "pooled.csv"), ds);
    } else if (tr->parsed()) {
      if (g.seed) tr_cfg.seed = *g.seed;
      auto ds = load_labels(tr_labels, load_sequences(tr_sequences));
      ds.targets = tr_targets.empty() ? compute_targets(ds) : load_targets(tr_targets);
      std::vector<std::string> ids;
      for (const auto& [id, t] : ds.targets)
        if (ds.find(id)) ids.push_back(id);
      if (ids.empty()) throw DataError("no sequence has a target interval");
      ExperimentConfig cfg;
      cfg.train = tr_cfg;
      cfg.log1p = !tr_no_log1p;
      const auto family = parse_model_family(tr_kind);
      Hyperparams hp;
      hp.pool_window = tr_pool_window;
      hp.pool_stat = parse_pool_stat(tr_pool_stat);
      hp.arch.layers = tr_layers;
      hp.arch.hidden = tr_hidden.empty() ? 4 : static_cast<int>(tr_hidden.front());
      hp.mlp_hidden = tr_hidden.empty() ? std::vector<std::size_t>{8} : tr_hidden;
      if (family == ModelFamily::Linear) {
        if (tr_l1) {
          hp.l1 = *tr_l1;
        } else {
          std::vector<FeatureVector> fvs;
          std::vector<TargetInterval> ts;
          for (const auto& id : ids) {
            fvs.push_back(extract_features(ds.find(id)->values));
            ts.push_back(ds.targets.at(id));
          }
          std::vector<Hyperparams> grid;
          for (double l1 : linear_l1_grid(fvs, ts, tr_cfg)) grid.push_back(Hyperparams{.l1 = l1});
          auto cv = cross_validate(ds, family, grid, cfg.inner_folds, tr_cfg.seed, cfg);
          hp.l1 = grid[cv.best].l1;
          err << "selected l1=" << hp.l1 << '\n';
        }
      }
      if (is_recurrent(family)) hp.arch.cell = parse_cell_kind(tr_kind);
      auto model = fit_family(family, hp, ds, ids, cfg);
      save_model(g.out_path(tr_out, "model.json"), *model);
    } else if (pr->parsed()) {
      auto model = load_model(pr_model);
      if (pr_sequences.empty() == pr_features.empty())
        throw CLI::ValidationError("give exactly one of --sequences or --features");
      auto o = open_out(g.out_path(pr_out, "predictions.csv"));
      o << "sequenceID,log_lambda,lambda\n";
      auto emit = [&](const std::string& id, double log_lambda) {
        o << id << ',' << format_double(log_lambda) << ',' << format_double(std::exp(log_lambda)) << '\n';
      };
      if (!pr_features.empty()) {
        if (!expects_features(model) && !std::holds_alternative<ConstantModel>(model))
          throw KindMismatch("model kind '" + model_kind(model) + "' expects sequences input, got features");
        auto [ids, fvs] = load_features(pr_features);
        for (std::size_t i = 0; i < ids.size(); ++i) emit(ids[i], predict_log(model, fvs[i]));
      } else {
        if (expects_features(model))
          throw KindMismatch("model kind '" + model_kind(model) + "' expects features input, got sequences");
        for (const auto& s : load_sequences(pr_sequences).sequences)
          emit(s.id, predict_log(model, std::span<const double>(s.values)));
      }
    } else if (ev->parsed()) {
      auto penalty = ev_pen.resolve();
      auto ds = load_labels(ev_labels, load_sequences(ev_sequences));
      auto o = open_out(g.out_path(ev_out, "evaluation.csv"));
      o << "sequenceID,tp,tn,fp,fn\n";
      ErrorCount total;
      for (const auto& s : ds.sequences) {
        if (!ds.has_labels(s.id)) continue;
        auto c = count_errors(run_solver(ev_method, s.values, penalty(s.id)).changepoints, ds.labels.at(s.id));
        total += c;
        o << s.id << ',' << c.tp << ',' << c.tn << ',' << c.fp << ',' << c.fn << '\n';
      }
      o << "TOTAL," << total.tp << ',' << total.tn << ',' << total.fp << ',' << total.fn << '\n';
      if (total.total() > 0) out << "accuracy " << format_double(accuracy(total)) << '\n';
    } else if (ex->parsed()) {
      auto cfg = ExperimentConfig::parse(ex_config);
      if (g.seed) cfg.seed = *g.seed;
      if (g.threads) cfg.threads = *g.threads;
      if (g.output_dir) cfg.output_dir = *g.output_dir;
      cfg.plot = cfg.plot || ex_plot;
      auto result = run_experiment(cfg);
      write_experiment(cfg, result);
      for (const auto& s : result.summary)
        out << s.dataset << ' ' << s.model << ' ' << format_double(s.mean_accuracy) << " +- "
            << format_double(s.sd_accuracy) << '\n';
    } else if (gc->parsed()) {
      auto report = grad_check(parse_grad_check_kind(gc_kind), gc_trials, gc_tol, g.seed.value_or(1));
      out << gc_kind << " trials=" << report.trials << " parameters=" << report.parameters_checked
          << " max_relative_error=" << report.max_relative_error
          << " max_absolute_error=" << report.max_absolute_error << (report.passed ? " PASS" : " FAIL") << '\n';
      return report.passed ? 0 : 3;
    }
  } catch (const CLI::ValidationError& e) {
    err << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

}  // namespace penlearn
