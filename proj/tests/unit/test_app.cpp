#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <thread>

#include "helpers.hpp"
#include "json.hpp"
#include "tarml/app/model_dir.hpp"
#include "tarml/app/pipeline.hpp"
#include "tarml/app/service.hpp"
#include "tarml/data/synthetic.hpp"
#include "tarml/error.hpp"
#include "httplib.h"

namespace tarml::app {
namespace {

using nlohmann::json;

class ServiceTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    data_ = new data::Dataset(data::make_synthetic(120, 21));
    bundle_ = std::make_shared<const ModelBundle>(
        train_bundle(*data_, {models::LsBoostConfig{4, 3, 40, 0.3}}, 1, 32));
  }
  static void TearDownTestSuite() {
    delete data_;
    bundle_.reset();
  }

  static json features_json(std::span<const double> x) {
    json f = json::object();
    for (std::size_t i = 0; i < x.size(); ++i) f[bundle_->schema.features()[i].key] = x[i];
    return f;
  }

  static std::vector<double> midpoint() {
    std::vector<double> x;
    for (std::size_t f = 0; f < data::kFeatureCount; ++f) {
      const auto& b = bundle_->training_bounds(f);
      x.push_back(0.5 * (b.min + b.max));
    }
    return x;
  }

  static data::Dataset* data_;
  static std::shared_ptr<const ModelBundle> bundle_;
};

data::Dataset* ServiceTest::data_ = nullptr;
std::shared_ptr<const ModelBundle> ServiceTest::bundle_;

TEST_F(ServiceTest, BundleTrainingBoundsAreObserved) {
  ASSERT_EQ(bundle_->models.size(), 5u);
  const auto obs = data_->observed_schema();
  for (std::size_t f = 0; f < data::kFeatureCount; ++f) EXPECT_EQ(bundle_->training_bounds(f), obs.features()[f].bounds);
  EXPECT_EQ(bundle_->background.rows, 32u);
  EXPECT_EQ(bundle_->models[1].target(), "h2");
}

TEST_F(ServiceTest, ModelDirRoundTrip) {
  const auto dir = test::scratch_dir("modeldir");
  save_model_dir(*bundle_, dir);
  for (const char* name : {"conversion.v1", "h2.v1", "co.v1", "co2.v1", "ch4.v1", "schema", "background.csv"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / name)) << name;
  }
  const auto back = load_model_dir(dir);
  EXPECT_EQ(back.fingerprint, bundle_->fingerprint);
  EXPECT_EQ(back.background, bundle_->background);
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> x;
    for (std::size_t f = 0; f < data::kFeatureCount; ++f) {
      const auto& b = bundle_->training_bounds(f);
      x.push_back(rng.uniform(b.min, b.max));
    }
    for (std::size_t t = 0; t < 5; ++t) {
      EXPECT_EQ(std::bit_cast<std::uint64_t>(back.models[t].predict(x).value),
                std::bit_cast<std::uint64_t>(bundle_->models[t].predict(x).value));
    }
  }
}

TEST_F(ServiceTest, ModelDirRejectsForeignFingerprint) {
  const auto dir = test::scratch_dir("modeldir_bad");
  save_model_dir(*bundle_, dir);
  std::ofstream(dir / "schema") << "0000\n";
  EXPECT_THROW(load_model_dir(dir), Error);
  std::filesystem::remove(dir / "h2.v1");
  EXPECT_THROW(load_model_dir(dir), Error);
  EXPECT_THROW(load_model_dir(dir / "nope"), Error);
}

TEST_F(ServiceTest, MakeBundleValidation) {
  auto models = bundle_->models;
  std::swap(models[0], models[1]);
  EXPECT_THROW(make_bundle(models), Error);
  models = bundle_->models;
  models.pop_back();
  EXPECT_THROW(make_bundle(models), Error);
}

TEST_F(ServiceTest, BackgroundCsvRoundTrip) {
  const auto text = background_to_csv(bundle_->background);
  EXPECT_EQ(text.substr(0, text.find(',')), "crystal_size");
  EXPECT_EQ(parse_background_csv(text), bundle_->background);
  EXPECT_THROW(parse_background_csv("a,b\n1,2\n"), Error);
}

TEST_F(ServiceTest, PredictEqualsLibraryBitForBit) {
  PredictionService svc(bundle_);
  Rng rng(8);
  for (int i = 0; i < 50; ++i) {
    std::vector<double> x;
    for (std::size_t f = 0; f < data::kFeatureCount; ++f) {
      const auto& b = bundle_->training_bounds(f);
      x.push_back(rng.uniform(b.min - 0.1 * b.span(), b.max + 0.1 * b.span()));
    }
    const auto r = svc.handle("POST", "/api/predict", json{{"features", features_json(x)}}.dump());
    ASSERT_EQ(r.status, 200) << r.body;
    const auto j = json::parse(r.body);
    for (std::size_t t = 0; t < 5; ++t) {
      const double got = j["predictions"][bundle_->schema.targets()[t].key].get<double>();
      EXPECT_EQ(std::bit_cast<std::uint64_t>(got), std::bit_cast<std::uint64_t>(bundle_->models[t].predict(x).value));
    }
  }
}

TEST_F(ServiceTest, MidpointHasNoFlags) {
  PredictionService svc(bundle_);
  const auto r = svc.predict(json{{"features", features_json(midpoint())}}.dump());
  ASSERT_EQ(r.status, 200);
  const auto j = json::parse(r.body);
  EXPECT_TRUE(j["extrapolated"].empty());
  EXPECT_EQ(j["predictions"].size(), 5u);
  for (const auto& [k, v] : j["predictions"].items()) EXPECT_TRUE(std::isfinite(v.get<double>()));
}

TEST_F(ServiceTest, ExtrapolationFlagsAtBoundaries) {
  PredictionService svc(bundle_);
  for (std::size_t f = 0; f < data::kFeatureCount; ++f) {
    const auto& b = bundle_->training_bounds(f);
    const auto key = bundle_->schema.features()[f].key;
    const struct {
      double value;
      bool flagged;
    } cases[] = {{b.min, false},
                 {b.max, false},
                 {std::nextafter(b.min, -INFINITY), true},
                 {std::nextafter(b.max, INFINITY), true},
                 {std::nextafter(b.min, INFINITY), false},
                 {std::nextafter(b.max, -INFINITY), false}};
    for (const auto& c : cases) {
      auto x = midpoint();
      x[f] = c.value;
      const auto j = json::parse(svc.predict(json{{"features", features_json(x)}}.dump()).body);
      for (std::size_t g = 0; g < data::kFeatureCount; ++g) {
        EXPECT_EQ(j["extrapolation"][bundle_->schema.features()[g].key].get<bool>(), g == f && c.flagged) << key;
      }
    }
  }
  auto x = midpoint();
  x[8] = 2000.0;
  const auto j = json::parse(svc.predict(json{{"features", features_json(x)}}.dump()).body);
  EXPECT_EQ(j["extrapolated"], json::array({"reaction_temperature"}));
}

TEST_F(ServiceTest, MalformedBodies) {
  PredictionService svc(bundle_);
  auto r = svc.handle("POST", "/api/predict", "{not json");
  EXPECT_EQ(r.status, 400);
  EXPECT_EQ(json::parse(r.body)["field"], "body");
  auto f = features_json(midpoint());
  f.erase("gas_flow");
  r = svc.handle("POST", "/api/predict", json{{"features", f}}.dump());
  EXPECT_EQ(r.status, 400);
  EXPECT_EQ(json::parse(r.body)["field"], "features.gas_flow");
  f = features_json(midpoint());
  f["gas_flow"] = "fast";
  EXPECT_EQ(svc.handle("POST", "/api/predict", json{{"features", f}}.dump()).status, 400);
  f = features_json(midpoint());
  f["colour"] = 1;
  EXPECT_EQ(svc.handle("POST", "/api/predict", json{{"features", f}}.dump()).status, 400);
  EXPECT_EQ(svc.handle("GET", "/api/predict", "").status, 405);
  EXPECT_EQ(svc.handle("GET", "/api/nothing", "").status, 404);
}

TEST_F(ServiceTest, SchemaEchoesNamesAndUnits) {
  PredictionService svc(bundle_);
  const auto j = json::parse(svc.handle("GET", "/api/schema", "").body);
  const auto canon = data::FeatureSchema::canonical();
  ASSERT_EQ(j["features"].size(), 11u);
  ASSERT_EQ(j["targets"].size(), 5u);
  for (std::size_t f = 0; f < 11; ++f) {
    EXPECT_EQ(j["features"][f]["name"], canon.features()[f].name);
    EXPECT_EQ(j["features"][f]["unit"], canon.features()[f].unit);
  }
  for (std::size_t t = 0; t < 5; ++t) EXPECT_EQ(j["targets"][t]["name"], canon.targets()[t].name);
  EXPECT_EQ(json::parse(svc.handle("GET", "/api/health", "").body)["status"], "ok");
}

TEST_F(ServiceTest, ExplainSatisfiesEfficiency) {
  PredictionService svc(bundle_);
  const auto x = midpoint();
  const auto r = svc.handle("POST", "/api/explain", json{{"features", features_json(x)}}.dump());
  ASSERT_EQ(r.status, 200) << r.body;
  const auto j = json::parse(r.body);
  ASSERT_EQ(j["explanations"].size(), 5u);
  for (std::size_t t = 0; t < 5; ++t) {
    const auto& e = j["explanations"][t];
    double total = e["base"].get<double>();
    for (const auto& [k, v] : e["values"].items()) total += v.get<double>();
    EXPECT_NEAR(total, bundle_->models[t].predict(x).value, 1e-9);
    EXPECT_EQ(e["method"], "tree");
  }
  auto empty = std::make_shared<ModelBundle>(*bundle_);
  empty->background = Matrix();
  PredictionService bare{std::shared_ptr<const ModelBundle>(empty)};
  EXPECT_EQ(bare.handle("POST", "/api/explain", json{{"features", features_json(x)}}.dump()).status, 422);
}

TEST_F(ServiceTest, OptimizeBudgetAndShape) {
  ServiceOptions o;
  o.optimize_budget = 1000;
  PredictionService svc(bundle_, o);
  auto r = svc.handle("POST", "/api/optimize", json{{"swarm_size", 10}, {"iterations", 100}}.dump());
  EXPECT_EQ(r.status, 422);
  EXPECT_EQ(json::parse(r.body)["field"], "iterations");
  r = svc.handle("POST", "/api/optimize",
                 json{{"swarm_size", 10},
                      {"iterations", 20},
                      {"archive_capacity", 15},
                      {"bounds", {{"reaction_temperature", {650.0, 700.0}}}},
                      {"senses", {{"co", "maximize"}}}}
                     .dump());
  ASSERT_EQ(r.status, 200) << r.body;
  const auto j = json::parse(r.body);
  EXPECT_EQ(j["evaluations"], 210);
  EXPECT_LE(j["solutions"].size(), 15u);
  EXPECT_EQ(j["senses"]["co"], "maximize");
  EXPECT_EQ(j["senses"]["conversion"], "maximize");
  EXPECT_EQ(j["senses"]["ch4"], "minimize");
  for (const auto& s : j["solutions"]) {
    const double t = s["decision"]["reaction_temperature"].get<double>();
    EXPECT_TRUE(t >= 650.0 && t <= 700.0);
  }
  EXPECT_EQ(svc.handle("POST", "/api/optimize", json{{"swarm_size", 4}, {"iterations", 2}, {"senses", {{"co", "up"}}}}.dump()).status, 400);
  EXPECT_EQ(svc.handle("POST", "/api/optimize", json{{"swarm_size", 4}, {"iterations", 2}, {"bounds", {{"x", {1, 2}}}}}.dump()).status, 400);
}

TEST_F(ServiceTest, ReloadSwapsAtomically) {
  const auto dir = test::scratch_dir("reload");
  save_model_dir(*bundle_, dir);
  PredictionService svc(dir);
  EXPECT_EQ(svc.generation(), 1u);
  const auto before = svc.snapshot();
  EXPECT_EQ(svc.handle("POST", "/api/reload", "").status, 200);
  EXPECT_EQ(svc.generation(), 2u);
  EXPECT_NE(svc.snapshot(), before);
  std::filesystem::remove(dir / "co.v1");
  EXPECT_EQ(svc.handle("POST", "/api/reload", "").status, 500);
  EXPECT_EQ(svc.generation(), 2u);
  PredictionService memory(bundle_);
  EXPECT_EQ(memory.handle("POST", "/api/reload", "").status, 409);
}

TEST_F(ServiceTest, ConcurrentPredictionsDuringSwap) {
  PredictionService svc(bundle_);
  const auto body = json{{"features", features_json(midpoint())}}.dump();
  const auto expected = svc.predict(body).body;
  std::atomic<bool> mismatch{false};
  std::vector<std::thread> readers;
  for (int t = 0; t < 4; ++t) {
    readers.emplace_back([&] {
      for (int i = 0; i < 50; ++i) {
        if (svc.predict(body).body != expected) mismatch = true;
      }
    });
  }
  for (int i = 0; i < 20; ++i) svc.swap(bundle_);
  for (auto& t : readers) t.join();
  EXPECT_FALSE(mismatch);
}

TEST_F(ServiceTest, HttpMatchesHandler) {
  PredictionService svc(bundle_);
  HttpServer server(svc);
  const int port = server.bind("127.0.0.1", 0);
  std::thread loop([&] { server.run(); });
  server.wait_until_ready();
  httplib::Client client("127.0.0.1", port);
  const auto body = json{{"features", features_json(midpoint())}}.dump();
  const auto res = client.Post("/api/predict", body, "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(res->body, svc.predict(body).body);
  const auto missing = client.Get("/api/missing");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);
  server.stop();
  loop.join();
}

TEST(Bind, Parsing) {
  EXPECT_EQ(parse_bind("0.0.0.0:9000").host, "0.0.0.0");
  EXPECT_EQ(parse_bind("0.0.0.0:9000").port, 9000);
  EXPECT_EQ(parse_bind(":81").host, "127.0.0.1");
  EXPECT_EQ(parse_bind("82").port, 82);
  EXPECT_THROW(parse_bind("host:http"), Error);
  EXPECT_THROW(parse_bind("host:70000"), Error);
  ::setenv("TARML_BIND", "10.0.0.1:7000", 1);
  EXPECT_EQ(resolve_bind({}).host, "10.0.0.1");
  ::unsetenv("TARML_BIND");
  EXPECT_EQ(resolve_bind({}).port, 8080);
}

}  // namespace
}  // namespace tarml::app
