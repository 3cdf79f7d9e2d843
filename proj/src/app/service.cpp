#include "tarml/app/service.hpp"

#include <cmath>
#include <cstdlib>
#include <limits>

#include "json.hpp"
#include "tarml/data/dataset.hpp"
#include "tarml/error.hpp"

namespace tarml::app {

using nlohmann::json;

namespace {

// A request the client got wrong; becomes 400 (or `status`) naming the field.
struct RequestError {
  std::string field;
  std::string message;
  int status = 400;
};

HttpResponse json_response(int status, const json& body) { return {status, body.dump(), "application/json"}; }

HttpResponse error_response(int status, const std::string& message, const std::string& field = {}) {
  json body{{"error", message}};
  if (!field.empty()) body["field"] = field;
  return json_response(status, body);
}

json parse_body(std::string_view body) {
  try {
    json j = json::parse(body);
    if (!j.is_object()) throw RequestError{"body", "request body must be a JSON object"};
    return j;
  } catch (const json::parse_error& e) {
    throw RequestError{"body", std::string("malformed JSON: ") + e.what()};
  }
}

std::vector<double> parse_features(const json& body, const data::FeatureSchema& schema) {
  if (!body.contains("features")) throw RequestError{"features", "missing object \"features\""};
  const json& f = body.at("features");
  if (!f.is_object()) throw RequestError{"features", "\"features\" must be an object keyed by feature"};
  for (const auto& [key, value] : f.items()) {
    if (!schema.find_feature_key(key)) throw RequestError{"features." + key, "unknown feature \"" + key + "\""};
  }
  std::vector<double> x(data::kFeatureCount);
  for (std::size_t i = 0; i < data::kFeatureCount; ++i) {
    const auto& key = schema.features()[i].key;
    if (!f.contains(key)) throw RequestError{"features." + key, "missing feature \"" + key + "\""};
    const json& v = f.at(key);
    if (!v.is_number()) throw RequestError{"features." + key, "feature \"" + key + "\" must be a number"};
    x[i] = v.get<double>();
  }
  return x;
}

template <typename T>
T optional_integer(const json& body, const std::string& key, T fallback, T lo) {
  if (!body.contains(key)) return fallback;
  const json& v = body.at(key);
  if (!v.is_number_integer() || v.get<long long>() < static_cast<long long>(lo)) {
    throw RequestError{key, "\"" + key + "\" must be an integer >= " + std::to_string(lo)};
  }
  return static_cast<T>(v.get<long long>());
}

json keyed(const data::FeatureSchema& schema, std::span<const double> values, bool targets) {
  json out = json::object();
  for (std::size_t i = 0; i < values.size(); ++i) {
    out[targets ? schema.targets()[i].key : schema.features()[i].key] = values[i];
  }
  return out;
}

}  // namespace

PredictionService::PredictionService(std::filesystem::path model_dir, ServiceOptions options)
    : dir_(std::move(model_dir)),
      options_(std::move(options)),
      bundle_(std::make_shared<const ModelBundle>(load_model_dir(*dir_))) {}

PredictionService::PredictionService(std::shared_ptr<const ModelBundle> bundle, ServiceOptions options)
    : options_(std::move(options)), bundle_(std::move(bundle)) {
  if (!bundle_) throw Error("service needs a model set");
}

std::shared_ptr<const ModelBundle> PredictionService::snapshot() const {
  std::lock_guard lock(snapshot_mutex_);
  return bundle_;
}

void PredictionService::swap(std::shared_ptr<const ModelBundle> bundle) {
  if (!bundle) throw Error("service needs a model set");
  std::lock_guard lock(snapshot_mutex_);
  bundle_ = std::move(bundle);
  ++generation_;
}

std::uint64_t PredictionService::generation() const {
  std::lock_guard lock(snapshot_mutex_);
  return generation_;
}

HttpResponse PredictionService::handle(std::string_view method, std::string_view path, std::string_view body) {
  struct Route {
    std::string_view path;
    std::string_view method;
  };
  static constexpr Route routes[] = {{"/api/health", "GET"},  {"/api/schema", "GET"},    {"/api/predict", "POST"},
                                     {"/api/explain", "POST"}, {"/api/optimize", "POST"}, {"/api/reload", "POST"}};
  const Route* route = nullptr;
  for (const auto& r : routes) {
    if (r.path == path) route = &r;
  }
  if (route == nullptr) return error_response(404, "no such endpoint: " + std::string(path));
  if (route->method != method) return error_response(405, std::string(path) + " expects " + std::string(route->method));
  try {
    if (path == "/api/health") return health();
    if (path == "/api/schema") return schema();
    if (path == "/api/predict") return predict(body);
    if (path == "/api/explain") return explain(body);
    if (path == "/api/optimize") return optimize(body);
    return reload();
  } catch (const RequestError& e) {
    return error_response(e.status, e.message, e.field);
  } catch (const std::exception& e) {
    return error_response(500, e.what());
  }
}

HttpResponse PredictionService::health() const {
  const auto b = snapshot();
  json targets = json::array();
  for (const auto& m : b->models) targets.push_back({{"key", m.target()}, {"family", models::to_string(m.family())}});
  return json_response(200, {{"status", "ok"},
                             {"model_version", models::kArtifactVersion},
                             {"fingerprint", b->fingerprint},
                             {"generation", generation()},
                             {"targets", targets},
                             {"background_rows", b->background.rows}});
}

HttpResponse PredictionService::schema() const {
  const auto b = snapshot();
  json features = json::array();
  for (const auto& c : b->schema.features()) {
    features.push_back({{"key", c.key},
                        {"name", c.name},
                        {"unit", c.unit},
                        {"kind", data::to_string(c.kind)},
                        {"min", c.bounds.min},
                        {"max", c.bounds.max}});
  }
  json targets = json::array();
  for (const auto& c : b->schema.targets()) {
    targets.push_back({{"key", c.key}, {"name", c.name}, {"unit", c.unit}, {"min", c.bounds.min}, {"max", c.bounds.max}});
  }
  return json_response(200, {{"fingerprint", b->fingerprint}, {"features", features}, {"targets", targets}});
}

HttpResponse PredictionService::predict(std::string_view body) const {
  const auto b = snapshot();
  const auto x = parse_features(parse_body(body), b->schema);
  std::vector<double> values;
  json variances = json::object();
  for (const auto& m : b->models) {
    const auto p = m.predict(x, b->fingerprint);
    values.push_back(p.value);
    if (p.variance) variances[m.target()] = *p.variance;
  }
  const auto flags = b->extrapolation(x);
  json extrapolation = json::object();
  json extrapolated = json::array();
  for (std::size_t f = 0; f < flags.size(); ++f) {
    extrapolation[b->schema.features()[f].key] = static_cast<bool>(flags[f]);
    if (flags[f]) extrapolated.push_back(b->schema.features()[f].key);
  }
  json out{{"model_version", models::kArtifactVersion},
           {"fingerprint", b->fingerprint},
           {"features", keyed(b->schema, x, false)},
           {"predictions", keyed(b->schema, values, true)},
           {"extrapolation", extrapolation},
           {"extrapolated", extrapolated}};
  if (!variances.empty()) out["variances"] = variances;
  return json_response(200, out);
}

HttpResponse PredictionService::explain(std::string_view body) const {
  const auto b = snapshot();
  const json request = parse_body(body);
  const auto x = parse_features(request, b->schema);
  if (b->background.rows == 0) {
    throw RequestError{"features", "the loaded model set has no background rows to explain against", 422};
  }
  shap::SamplingOptions sampling = options_.explain_sampling;
  sampling.permutations = optional_integer<std::size_t>(request, "permutations", sampling.permutations, 1);
  sampling.seed = optional_integer<std::uint64_t>(request, "seed", sampling.seed, 0);
  json explanations = json::array();
  for (const auto& m : b->models) {
    const auto e = shap::explain(m, x, b->background, sampling);
    explanations.push_back({{"target", m.target()},
                            {"method", m.lsboost() ? "tree" : "sampling"},
                            {"base", e.base},
                            {"prediction", e.prediction},
                            {"values", keyed(b->schema, e.values, false)}});
  }
  return json_response(200, {{"model_version", models::kArtifactVersion},
                             {"features", keyed(b->schema, x, false)},
                             {"background_rows", b->background.rows},
                             {"explanations", explanations}});
}

HttpResponse PredictionService::optimize(std::string_view body) {
  const auto b = snapshot();
  const json request = parse_body(body);

  swarm::MopsoParams params;
  params.pso.swarm_size = optional_integer<std::size_t>(request, "swarm_size", params.pso.swarm_size, 2);
  params.pso.iterations = optional_integer<std::size_t>(request, "iterations", params.pso.iterations, 0);
  params.archive_capacity = optional_integer<std::size_t>(request, "archive_capacity", params.archive_capacity, 1);
  params.pso.seed = optional_integer<std::uint64_t>(request, "seed", params.pso.seed, 0);
  params.pso.evaluation = Exec::kParallel;

  const std::size_t evaluations = params.pso.swarm_size * (params.pso.iterations + 1);
  if (params.pso.iterations >= std::numeric_limits<std::size_t>::max() / params.pso.swarm_size ||
      evaluations > options_.optimize_budget) {
    throw RequestError{"iterations",
                       "swarm_size * (iterations + 1) = " + std::to_string(evaluations) +
                           " model evaluations exceeds the budget of " + std::to_string(options_.optimize_budget),
                       422};
  }

  for (std::size_t f = 0; f < data::kFeatureCount; ++f) params.pso.bounds.push_back(b->training_bounds(f));
  if (request.contains("bounds")) {
    const json& bounds = request.at("bounds");
    if (!bounds.is_object()) throw RequestError{"bounds", "\"bounds\" must be an object keyed by feature"};
    for (const auto& [key, range] : bounds.items()) {
      const auto f = b->schema.find_feature_key(key);
      if (!f) throw RequestError{"bounds." + key, "unknown feature \"" + key + "\""};
      if (!range.is_array() || range.size() != 2 || !range[0].is_number() || !range[1].is_number()) {
        throw RequestError{"bounds." + key, "bounds must be [min, max]"};
      }
      const double lo = range[0].get<double>(), hi = range[1].get<double>();
      if (!(lo < hi)) throw RequestError{"bounds." + key, "bounds need min < max"};
      params.pso.bounds[*f] = {lo, hi};
    }
  }

  params.senses = {swarm::Sense::kMaximize, swarm::Sense::kMaximize, swarm::Sense::kMinimize,
                   swarm::Sense::kMinimize, swarm::Sense::kMinimize};
  if (request.contains("senses")) {
    const json& senses = request.at("senses");
    if (!senses.is_object()) throw RequestError{"senses", "\"senses\" must be an object keyed by target"};
    for (const auto& [key, sense] : senses.items()) {
      const auto t = b->schema.find_target_key(key);
      if (!t) throw RequestError{"senses." + key, "unknown target \"" + key + "\""};
      if (sense == "maximize") {
        params.senses[*t] = swarm::Sense::kMaximize;
      } else if (sense == "minimize") {
        params.senses[*t] = swarm::Sense::kMinimize;
      } else {
        throw RequestError{"senses." + key, "sense must be \"maximize\" or \"minimize\""};
      }
    }
  }

  if (optimize_waiting_.fetch_add(1) >= options_.optimize_queue) {
    optimize_waiting_.fetch_sub(1);
    return error_response(503, "optimizer queue is full; retry later");
  }
  std::unique_lock lock(optimize_mutex_);
  optimize_waiting_.fetch_sub(1);

  const auto result = swarm::mopso(
      [&](std::span<const double> x) {
        std::vector<double> out;
        for (const auto& m : b->models) out.push_back(m.predict(x).value);
        return out;
      },
      params);
  lock.unlock();

  json solutions = json::array();
  for (const auto& s : result.solutions) {
    solutions.push_back({{"decision", keyed(b->schema, s.decision, false)},
                         {"objectives", keyed(b->schema, s.objectives, true)}});
  }
  const auto summary = swarm::summarize(result.solutions);
  json decisions = json::object(), objectives = json::object();
  for (std::size_t f = 0; f < summary.decision_ranges.size(); ++f) {
    decisions[b->schema.features()[f].key] = {summary.decision_ranges[f].min, summary.decision_ranges[f].max};
  }
  for (std::size_t t = 0; t < summary.objective_ranges.size(); ++t) {
    objectives[b->schema.targets()[t].key] = {summary.objective_ranges[t].min, summary.objective_ranges[t].max};
  }
  json senses = json::object();
  for (std::size_t t = 0; t < params.senses.size(); ++t) {
    senses[b->schema.targets()[t].key] = params.senses[t] == swarm::Sense::kMaximize ? "maximize" : "minimize";
  }
  return json_response(200, {{"solutions", solutions},
                             {"summary", {{"decisions", decisions}, {"objectives", objectives}}},
                             {"senses", senses},
                             {"evaluations", result.evaluations},
                             {"archive_sizes", result.archive_sizes}});
}

HttpResponse PredictionService::reload() {
  if (!dir_) return error_response(409, "the service was not started from a model directory");
  try {
    swap(std::make_shared<const ModelBundle>(load_model_dir(*dir_)));
  } catch (const std::exception& e) {
    return error_response(500, std::string("reload failed, previous models kept: ") + e.what());
  }
  return json_response(200, {{"status", "reloaded"}, {"generation", generation()}});
}

BindAddress parse_bind(std::string_view text) {
  BindAddress b;
  std::string_view port = text;
  if (const auto colon = text.rfind(':'); colon != std::string_view::npos) {
    if (colon > 0) b.host = std::string(text.substr(0, colon));
    port = text.substr(colon + 1);
  }
  const auto p = data::parse_number(port);
  if (!p || *p != std::floor(*p) || *p < 0 || *p > 65535) {
    throw Error("bad bind address \"" + std::string(text) + "\"; expected host:port");
  }
  b.port = static_cast<int>(*p);
  return b;
}

BindAddress resolve_bind(const BindAddress& fallback) {
  const char* env = std::getenv("TARML_BIND");
  if (env == nullptr || *env == '\0') return fallback;
  return parse_bind(env);
}

}  // namespace tarml::app
