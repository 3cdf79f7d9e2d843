#include "tarml/models/regressor.hpp"

#include <fstream>
#include <sstream>

#include "tarml/data/dataset.hpp"
#include "tarml/error.hpp"
#include "tarml/models/config_io.hpp"

namespace tarml::models {

using nlohmann::json;

std::string_view to_string(Family f) {
  switch (f) {
    case Family::kLsBoost:
      return "lsboost";
    case Family::kGpr:
      return "gpr";
    case Family::kMlp:
      return "mlp";
  }
  return "unknown";
}

Family parse_family(std::string_view text) {
  if (text == "lsboost") return Family::kLsBoost;
  if (text == "gpr") return Family::kGpr;
  if (text == "mlp") return Family::kMlp;
  throw Error("unknown model family \"" + std::string(text) + "\" (expected lsboost, gpr or mlp)");
}

Family family_of(const RegressorConfig& config) {
  return std::visit(
      [](const auto& c) {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, LsBoostConfig>) return Family::kLsBoost;
        if constexpr (std::is_same_v<T, GprConfig>) return Family::kGpr;
        if constexpr (std::is_same_v<T, MlpConfig>) return Family::kMlp;
      },
      config);
}

void validate(const RegressorConfig& config) {
  std::visit([](const auto& c) { validate(c); }, config);
}

std::string describe(const RegressorConfig& config) {
  using data::format_number;
  std::ostringstream out;
  out << to_string(family_of(config));
  if (const auto* c = std::get_if<LsBoostConfig>(&config)) {
    out << " max_splits=" << c->max_splits << " min_leaf=" << c->min_leaf << " cycles=" << c->cycles
        << " learning_rate=" << format_number(c->learning_rate);
  } else if (const auto* g = std::get_if<GprConfig>(&config)) {
    out << " signal_variance=" << format_number(g->signal_variance);
    if (g->lengthscales.empty()) {
      out << " lengthscale=" << format_number(g->lengthscale);
    } else {
      out << " lengthscales=";
      for (std::size_t i = 0; i < g->lengthscales.size(); ++i) {
        out << (i ? ":" : "") << format_number(g->lengthscales[i]);
      }
    }
    out << " noise_variance=" << format_number(g->noise_variance);
  } else if (const auto* m = std::get_if<MlpConfig>(&config)) {
    out << " hidden=" << m->hidden << " activation=" << to_string(m->activation) << " epochs=" << m->epochs
        << " step_size=" << format_number(m->step_size) << " seed=" << m->seed;
  }
  return out.str();
}

json config_to_json(const RegressorConfig& config) {
  json j;
  j["family"] = to_string(family_of(config));
  if (const auto* c = std::get_if<LsBoostConfig>(&config)) {
    j["max_splits"] = c->max_splits;
    j["min_leaf"] = c->min_leaf;
    j["cycles"] = c->cycles;
    j["learning_rate"] = c->learning_rate;
  } else if (const auto* g = std::get_if<GprConfig>(&config)) {
    j["signal_variance"] = g->signal_variance;
    j["lengthscale"] = g->lengthscale;
    j["lengthscales"] = g->lengthscales;
    j["noise_variance"] = g->noise_variance;
  } else if (const auto* m = std::get_if<MlpConfig>(&config)) {
    j["hidden"] = m->hidden;
    j["activation"] = to_string(m->activation);
    j["epochs"] = m->epochs;
    j["step_size"] = m->step_size;
    j["seed"] = m->seed;
  }
  return j;
}

RegressorConfig config_from_json(const json& j) {
  try {
    switch (parse_family(j.at("family").get<std::string>())) {
      case Family::kLsBoost: {
        LsBoostConfig c;
        c.max_splits = j.value("max_splits", c.max_splits);
        c.min_leaf = j.value("min_leaf", c.min_leaf);
        c.cycles = j.value("cycles", c.cycles);
        c.learning_rate = j.value("learning_rate", c.learning_rate);
        return c;
      }
      case Family::kGpr: {
        GprConfig c;
        c.signal_variance = j.value("signal_variance", c.signal_variance);
        c.lengthscale = j.value("lengthscale", c.lengthscale);
        c.lengthscales = j.value("lengthscales", c.lengthscales);
        c.noise_variance = j.value("noise_variance", c.noise_variance);
        return c;
      }
      case Family::kMlp: {
        MlpConfig c;
        c.hidden = j.value("hidden", c.hidden);
        c.activation = parse_activation(j.value("activation", std::string("tanh")));
        c.epochs = j.value("epochs", c.epochs);
        c.step_size = j.value("step_size", c.step_size);
        c.seed = j.value("seed", c.seed);
        return c;
      }
    }
  } catch (const json::exception& e) {
    throw Error(std::string("bad model config: ") + e.what());
  }
  throw Error("bad model config");
}

ModelScaling ModelScaling::identity(std::size_t features) {
  return {std::vector<data::Bounds>(features, data::Bounds{0.0, 1.0}), {0.0, 1.0}};
}

Regressor::Regressor(RegressorConfig config, FittedModel model, ModelScaling scaling,
                     std::string schema_fingerprint, std::string target, TrainingInfo info)
    : config_(std::move(config)),
      model_(std::move(model)),
      scaling_(std::move(scaling)),
      fingerprint_(std::move(schema_fingerprint)),
      target_(std::move(target)),
      info_(info) {
  if (family_of(config_) != static_cast<Family>(model_.index())) {
    throw Error("regressor config family does not match the fitted model");
  }
}

double Regressor::predict_unit(std::span<const double> x_unit) const {
  if (x_unit.size() != input_width()) {
    throw SchemaError("expected " + std::to_string(input_width()) + " feature values, got " +
                      std::to_string(x_unit.size()));
  }
  return std::visit(
      [&](const auto& m) {
        if constexpr (std::is_same_v<std::decay_t<decltype(m)>, GprModel>) {
          return m.predict_mean(x_unit);
        } else {
          return m.predict(x_unit);
        }
      },
      model_);
}

std::vector<double> Regressor::to_unit(std::span<const double> x) const {
  if (x.size() != input_width()) {
    throw SchemaError("expected " + std::to_string(input_width()) + " feature values, got " +
                      std::to_string(x.size()));
  }
  std::vector<double> u(x.size());
  for (std::size_t d = 0; d < x.size(); ++d) {
    if (!std::isfinite(x[d])) throw Error("feature value " + std::to_string(d) + " is not finite");
    const auto& b = scaling_.features[d];
    u[d] = (x[d] - b.min) / (b.max - b.min);
  }
  return u;
}

double Regressor::target_from_unit(double u) const {
  return scaling_.target.min + u * (scaling_.target.max - scaling_.target.min);
}

Prediction Regressor::predict(std::span<const double> x) const {
  const auto u = to_unit(x);
  Prediction p;
  if (const auto* g = std::get_if<GprModel>(&model_)) {
    const auto gp = g->predict(u);
    const double span = scaling_.target.max - scaling_.target.min;
    p.value = target_from_unit(gp.mean);
    p.variance = gp.variance * span * span;
  } else {
    p.value = target_from_unit(predict_unit(u));
  }
  return p;
}

Prediction Regressor::predict(std::span<const double> x, std::string_view expected_fingerprint) const {
  if (expected_fingerprint != fingerprint_) {
    throw SchemaError("schema fingerprint mismatch: model " + fingerprint_ + ", caller " +
                      std::string(expected_fingerprint));
  }
  return predict(x);
}

Regressor train_regressor(const RegressorConfig& config, const Matrix& x_unit, std::span<const double> y_unit,
                          ModelScaling scaling, std::string schema_fingerprint, std::string target,
                          TrainingInfo info) {
  validate(config);
  if (scaling.features.size() != x_unit.cols) throw Error("scaling width does not match the training matrix");
  FittedModel model = std::visit(
      [&](const auto& c) -> FittedModel {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, LsBoostConfig>) return train_lsboost(c, x_unit, y_unit);
        if constexpr (std::is_same_v<T, GprConfig>) return train_gpr(c, x_unit, y_unit);
        if constexpr (std::is_same_v<T, MlpConfig>) return train_mlp(c, x_unit, y_unit);
      },
      config);
  info.rows = x_unit.rows;
  Regressor r(config, std::move(model), std::move(scaling), std::move(schema_fingerprint), std::move(target), info);
  double se = 0.0;
  for (std::size_t i = 0; i < x_unit.rows; ++i) {
    const double e = r.predict_unit(x_unit.row(i)) - y_unit[i];
    se += e * e;
  }
  info.training_mse = x_unit.rows ? se / static_cast<double>(x_unit.rows) : 0.0;
  return Regressor(r.config(), r.model(), r.scaling(), r.schema_fingerprint(), r.target(), info);
}

std::vector<double> predict_batch(const Regressor& model, const Matrix& x, Exec exec) {
  std::vector<double> out(x.rows);
  const auto n = static_cast<std::ptrdiff_t>(x.rows);
  if (exec == Exec::kParallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      out[static_cast<std::size_t>(i)] = model.predict(x.row(static_cast<std::size_t>(i))).value;
    }
  } else {
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      out[static_cast<std::size_t>(i)] = model.predict(x.row(static_cast<std::size_t>(i))).value;
    }
  }
  return out;
}

namespace {

json bounds_json(const data::Bounds& b) { return json::array({b.min, b.max}); }

data::Bounds bounds_from(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

json model_json(const FittedModel& model) {
  json j;
  if (const auto* b = std::get_if<LsBoostModel>(&model)) {
    j["initial"] = b->initial;
    j["learning_rate"] = b->learning_rate;
    j["training_mse"] = b->training_mse;
    json trees = json::array();
    for (const auto& t : b->trees) {
      json nodes = json::array();
      for (std::size_t id = 0; id < t.nodes.size(); ++id) {
        const auto& n = t.nodes[id];
        nodes.push_back(json::array({id, n.feature, n.threshold, n.left, n.right, n.value, n.count}));
      }
      trees.push_back(json{{"nodes", std::move(nodes)}});
    }
    j["trees"] = std::move(trees);
  } else if (const auto* g = std::get_if<GprModel>(&model)) {
    j["rows"] = g->inputs().rows;
    j["cols"] = g->inputs().cols;
    j["inputs"] = g->inputs().data;
    j["alpha"] = g->alpha();
    j["y_mean"] = g->y_mean();
    j["jitter"] = g->jitter();
  } else if (const auto* m = std::get_if<MlpModel>(&model)) {
    j["inputs"] = m->inputs;
    j["hidden"] = m->hidden;
    j["activation"] = to_string(m->activation);
    j["params"] = m->params;
    j["training_mse"] = m->training_mse;
  }
  return j;
}

FittedModel model_from(const RegressorConfig& config, const json& j) {
  switch (family_of(config)) {
    case Family::kLsBoost: {
      LsBoostModel b;
      b.initial = j.at("initial").get<double>();
      b.learning_rate = j.at("learning_rate").get<double>();
      b.training_mse = j.at("training_mse").get<std::vector<double>>();
      for (const auto& t : j.at("trees")) {
        RegressionTree tree;
        for (const auto& n : t.at("nodes")) {
          if (n.at(0).get<std::size_t>() != tree.nodes.size()) throw Error("artifact tree node ids out of order");
          TreeNode node;
          node.feature = n.at(1).get<int>();
          node.threshold = n.at(2).get<double>();
          node.left = n.at(3).get<int>();
          node.right = n.at(4).get<int>();
          node.value = n.at(5).get<double>();
          node.count = n.at(6).get<std::size_t>();
          tree.nodes.push_back(node);
        }
        const auto size = static_cast<int>(tree.nodes.size());
        for (const auto& node : tree.nodes) {
          if (!node.is_leaf() && (node.left <= 0 || node.left >= size || node.right <= 0 || node.right >= size)) {
            throw Error("artifact tree has a dangling child index");
          }
        }
        if (tree.nodes.empty()) throw Error("artifact tree has no nodes");
        b.trees.push_back(std::move(tree));
      }
      return b;
    }
    case Family::kGpr: {
      Matrix inputs(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>(),
                    j.at("inputs").get<std::vector<double>>());
      if (inputs.data.size() != inputs.rows * inputs.cols) throw Error("artifact gpr inputs have the wrong size");
      auto alpha = j.at("alpha").get<std::vector<double>>();
      if (alpha.size() != inputs.rows) throw Error("artifact gpr weights have the wrong size");
      return GprModel(std::get<GprConfig>(config), std::move(inputs), std::move(alpha),
                      j.at("y_mean").get<double>(), j.at("jitter").get<double>());
    }
    case Family::kMlp: {
      MlpModel m;
      m.inputs = j.at("inputs").get<std::size_t>();
      m.hidden = j.at("hidden").get<std::size_t>();
      m.activation = parse_activation(j.at("activation").get<std::string>());
      m.params = j.at("params").get<std::vector<double>>();
      m.training_mse = j.at("training_mse").get<double>();
      if (m.params.size() != mlp_param_count(m.inputs, m.hidden)) throw Error("artifact mlp has the wrong size");
      return m;
    }
  }
  throw Error("unknown family");
}

}  // namespace

std::string save_artifact(const Regressor& model) {
  json j;
  j["format"] = "tarml-regressor";
  j["version"] = kArtifactVersion;
  j["family"] = to_string(model.family());
  j["target"] = model.target();
  j["schema_fingerprint"] = model.schema_fingerprint();
  j["config"] = config_to_json(model.config());
  json features = json::array();
  for (const auto& b : model.scaling().features) features.push_back(bounds_json(b));
  j["scaling"] = {{"features", std::move(features)}, {"target", bounds_json(model.scaling().target)}};
  const auto& info = model.info();
  j["training"] = {{"seed", info.seed},
                   {"fold", info.fold ? json(*info.fold) : json(nullptr)},
                   {"rows", info.rows},
                   {"training_mse", info.training_mse}};
  j["model"] = model_json(model.model());
  return j.dump(1) + "\n";
}

Regressor load_artifact(std::string_view text) {
  if (text.empty()) throw Error("artifact is empty");
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(std::string("corrupt artifact: ") + e.what());
  }
  try {
    if (!j.is_object() || j.value("format", "") != "tarml-regressor") {
      throw Error("corrupt artifact: missing tarml-regressor header");
    }
    const auto version = j.at("version").get<std::string>();
    if (version != kArtifactVersion) {
      throw Error("unsupported artifact version \"" + version + "\" (this build reads " +
                  std::string(kArtifactVersion) + ")");
    }
    const RegressorConfig config = config_from_json(j.at("config"));
    if (to_string(family_of(config)) != j.at("family").get<std::string>()) {
      throw Error("corrupt artifact: family does not match config");
    }
    ModelScaling scaling;
    for (const auto& b : j.at("scaling").at("features")) scaling.features.push_back(bounds_from(b));
    scaling.target = bounds_from(j.at("scaling").at("target"));
    TrainingInfo info;
    const auto& t = j.at("training");
    info.seed = t.at("seed").get<std::uint64_t>();
    if (!t.at("fold").is_null()) info.fold = t.at("fold").get<std::size_t>();
    info.rows = t.at("rows").get<std::size_t>();
    info.training_mse = t.at("training_mse").get<double>();
    return Regressor(config, model_from(config, j.at("model")), std::move(scaling),
                     j.at("schema_fingerprint").get<std::string>(), j.at("target").get<std::string>(), info);
  } catch (const json::exception& e) {
    throw Error(std::string("corrupt artifact: ") + e.what());
  }
}

void save_artifact_file(const Regressor& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write artifact: " + path);
  out << save_artifact(model);
  if (!out) throw Error("failed writing artifact: " + path);
}

Regressor load_artifact_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open artifact: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_artifact(buf.str());
}

}  // namespace tarml::models
