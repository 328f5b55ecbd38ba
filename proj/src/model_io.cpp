#include "penlearn/model_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace penlearn {

using nlohmann::json;

namespace {

json meta_json(const TrainMeta& m) {
  return {{"trained", m.trained},
          {"iterations", m.iterations},
          {"best_iteration", m.best_iteration},
          {"best_validation_loss", m.best_validation_loss},
          {"seed", m.seed},
          {"best_loss_curve", m.best_loss_curve}};
}

TrainMeta meta_from(const json& j) {
  TrainMeta m;
  if (j.is_null()) return m;
  m.trained = j.at("trained").get<bool>();
  m.iterations = j.at("iterations").get<int>();
  m.best_iteration = j.at("best_iteration").get<int>();
  m.best_validation_loss = j.at("best_validation_loss").get<double>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.best_loss_curve = j.at("best_loss_curve").get<std::vector<double>>();
  return m;
}

json scaling_json(const FeatureScaling& s) {
  return {{"indices", s.indices}, {"names", s.names}, {"mean", s.mean}, {"sd", s.sd}};
}

FeatureScaling scaling_from(const json& j) {
  FeatureScaling s;
  s.indices = j.at("indices").get<std::vector<std::size_t>>();
  s.names = j.at("names").get<std::vector<std::string>>();
  s.mean = j.at("mean").get<std::vector<double>>();
  s.sd = j.at("sd").get<std::vector<double>>();
  if (s.names.size() != s.indices.size() || s.mean.size() != s.indices.size() || s.sd.size() != s.indices.size())
    throw DataError("model file: inconsistent feature scaling lengths");
  for (auto i : s.indices)
    if (i >= kFeatureCount) throw DataError("model file: feature index out of range");
  return s;
}

void require_finite(const std::vector<double>& v, const char* what) {
  for (double x : v)
    if (!std::isfinite(x)) throw DataError(std::string("model has a non-finite ") + what);
}

struct ToJson {
  json operator()(const ConstantModel& m) const {
    if (!std::isfinite(m.log_lambda)) throw DataError("model has a non-finite constant");
    return {{"kind", "constant"}, {"arch", json::object()}, {"params", {{"log_lambda", m.log_lambda}}},
            {"preprocessing_stats", json::object()}, {"train_meta", nullptr}};
  }
  json operator()(const LinearModel& m) const {
    require_finite(m.weights, "weight");
    return {{"kind", "linear"},
            {"arch", {{"features", m.weights.size()}, {"l1", m.l1}}},
            {"params", {{"weights", m.weights}, {"bias", m.bias}}},
            {"preprocessing_stats", {{"feature_scaling", scaling_json(m.scaling)}}},
            {"train_meta", meta_json(m.meta)}};
  }
  json operator()(const MlpModel& m) const {
    require_finite(m.params, "parameter");
    return {{"kind", "mlp"},
            {"arch", {{"layer_sizes", m.layer_sizes}}},
            {"params", {{"flat", m.params}}},
            {"preprocessing_stats", {{"feature_scaling", scaling_json(m.scaling)}}},
            {"train_meta", meta_json(m.meta)}};
  }
  json operator()(const RecurrentModel& m) const {
    require_finite(m.params, "parameter");
    json pre = {{"pool_window", m.preprocessing.pool_window},
                {"pool_stat", to_string(m.preprocessing.pool_stat)}};
    if (m.preprocessing.normalization)
      pre["normalization"] = {{"mean", m.preprocessing.normalization->mean},
                              {"sd", m.preprocessing.normalization->sd},
                              {"log1p", m.preprocessing.normalization->log1p}};
    else
      pre["normalization"] = nullptr;
    return {{"kind", to_string(m.arch.cell)},
            {"arch", {{"cell", to_string(m.arch.cell)}, {"layers", m.arch.layers}, {"hidden", m.arch.hidden}}},
            {"params", {{"flat", m.params}}},
            {"preprocessing_stats", pre},
            {"train_meta", meta_json(m.meta)}};
  }
};

}  // namespace

std::string model_to_json(const LearnerModel& model) {
  json doc = std::visit(ToJson{}, model);
  doc["format_version"] = kModelFormatVersion;
  return doc.dump(2) + "\n";
}

LearnerModel model_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("model file is not valid JSON: ") + e.what());
  }
  try {
    if (doc.at("format_version").get<int>() != kModelFormatVersion)
      throw DataError("unsupported model format_version");
    const auto kind = doc.at("kind").get<std::string>();
    const auto& params = doc.at("params");
    if (kind == "constant") return ConstantModel{params.at("log_lambda").get<double>()};
    if (kind == "linear") {
      LinearModel m;
      m.scaling = scaling_from(doc.at("preprocessing_stats").at("feature_scaling"));
      m.weights = params.at("weights").get<std::vector<double>>();
      m.bias = params.at("bias").get<double>();
      m.l1 = doc.at("arch").at("l1").get<double>();
      m.meta = meta_from(doc.at("train_meta"));
      if (m.weights.size() != m.scaling.indices.size()) throw DataError("model file: weight count mismatch");
      return m;
    }
    if (kind == "mlp") {
      MlpModel m;
      m.scaling = scaling_from(doc.at("preprocessing_stats").at("feature_scaling"));
      m.layer_sizes = doc.at("arch").at("layer_sizes").get<std::vector<std::size_t>>();
      m.params = params.at("flat").get<std::vector<double>>();
      m.meta = meta_from(doc.at("train_meta"));
      if (m.layer_sizes.size() < 3 || m.params.size() != m.param_count() ||
          m.layer_sizes.front() != m.scaling.indices.size())
        throw DataError("model file: MLP shape mismatch");
      return m;
    }
    if (kind == "rnn" || kind == "lstm" || kind == "gru") {
      RecurrentModel m;
      const auto& arch = doc.at("arch");
      m.arch.cell = parse_cell_kind(arch.at("cell").get<std::string>());
      m.arch.layers = arch.at("layers").get<int>();
      m.arch.hidden = arch.at("hidden").get<int>();
      m.params = params.at("flat").get<std::vector<double>>();
      const auto& pre = doc.at("preprocessing_stats");
      m.preprocessing.pool_window = pre.at("pool_window").get<std::size_t>();
      m.preprocessing.pool_stat = parse_pool_stat(pre.at("pool_stat").get<std::string>());
      if (!pre.at("normalization").is_null()) {
        const auto& n = pre.at("normalization");
        m.preprocessing.normalization =
            NormalizationStats{n.at("mean").get<double>(), n.at("sd").get<double>(), n.at("log1p").get<bool>()};
      }
      m.meta = meta_from(doc.at("train_meta"));
      if (m.params.size() != m.arch.param_count()) throw DataError("model file: recurrent parameter count mismatch");
      return m;
    }
    throw DataError("unknown model kind '" + kind + "'");
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed model file: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("malformed model file: ") + e.what());
  }
}

void save_model(const std::filesystem::path& path, const LearnerModel& model) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << model_to_json(model);
}

LearnerModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open model file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return model_from_json(ss.str());
}

}  // namespace penlearn
