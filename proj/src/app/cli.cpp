#include "tarml/app/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "tarml/app/model_dir.hpp"
#include "tarml/app/pipeline.hpp"
#include "tarml/app/service.hpp"
#include "tarml/data/preprocess.hpp"
#include "tarml/error.hpp"
#include "tarml/metrics.hpp"
#include "tarml/models/config_io.hpp"
#include "tarml/shap.hpp"
#include "tarml/stats.hpp"
#include "tarml/swarm.hpp"
#include "tarml/tuner.hpp"
#include "tarml/xrd.hpp"

namespace tarml::app {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

data::Dataset load_clean(const std::string& path, const std::string& policy, std::ostream& out) {
  const auto raw = data::read_dataset(path);
  auto [clean, report] = data::remove_outliers(raw, data::parse_outlier_policy(policy));
  out << "loaded " << raw.size() << " rows from " << path << ", removed " << report.removed_rows.size()
      << " as outliers (" << policy << ")\n";
  return clean;
}

std::vector<models::RegressorConfig> load_configs(const std::string& path, const std::string& family) {
  if (path.empty()) {
    switch (models::parse_family(family)) {
      case models::Family::kLsBoost:
        return {models::LsBoostConfig{}};
      case models::Family::kGpr:
        return {models::GprConfig{}};
      case models::Family::kMlp:
        return {models::MlpConfig{}};
    }
  }
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw Error(path + ": malformed JSON: " + e.what());
  }
  std::vector<models::RegressorConfig> configs;
  if (j.is_array()) {
    for (const auto& c : j) configs.push_back(models::config_from_json(c));
  } else {
    configs.push_back(models::config_from_json(j));
  }
  for (const auto& c : configs) models::validate(c);
  if (configs.size() != 1 && configs.size() != data::kTargetCount) {
    throw Error(path + ": expected one config or an array of " + std::to_string(data::kTargetCount));
  }
  return configs;
}

std::string scaling_json(const data::ScalingSpec& s, const data::FeatureSchema& schema) {
  json cols = json::array();
  for (std::size_t c = 0; c < s.columns.size(); ++c) {
    cols.push_back({{"key", schema.column(c).key}, {"min", s.columns[c].min}, {"max", s.columns[c].max}});
  }
  return json{{"fingerprint", s.fingerprint}, {"columns", cols}}.dump(2) + "\n";
}

std::size_t column_by_key(const data::FeatureSchema& schema, const std::string& key) {
  for (std::size_t c = 0; c < data::kColumnCount; ++c) {
    if (schema.column(c).key == key) return c;
  }
  throw Error("unknown column key \"" + key + "\"");
}

std::pair<std::string, std::string> split_pair(const std::string& text, char sep) {
  const auto at = text.find(sep);
  if (at == std::string::npos) throw Error("expected a:b pair, got \"" + text + "\"");
  return {text.substr(0, at), text.substr(at + 1)};
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Surrogate modeling, optimization and explanation for catalytic tar reforming data"};
  app.name("tarml");
  app.require_subcommand(1);

  std::string data_path, outliers = "iqr", out_path, config_path, family = "lsboost", model_dir;
  std::uint64_t seed = 1;
  std::size_t folds = 5;

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Validate a dataset, remove outliers, write clean and normalized copies");
  std::string report_path, normalized_path, scaling_path;
  ingest->add_option("--data", data_path, "Dataset CSV")->required();
  ingest->add_option("--outliers", outliers, "none | iqr[:m] | zscore[:t]")->capture_default_str();
  ingest->add_option("--out", out_path, "Write the cleaned dataset here");
  ingest->add_option("--report", report_path, "Write the removal report here");
  ingest->add_option("--normalized", normalized_path, "Write the normalized dataset here");
  ingest->add_option("--scaling", scaling_path, "Write the per-column scaling (JSON) here");

  // xrd
  auto* xrd_cmd = app.add_subcommand("xrd", "Fit diffraction peaks and report crystal size and crystallinity");
  std::string curve_path, windows_path, fragment_path;
  double shape_factor = xrd::kDefaultShapeFactor, wavelength = xrd::kCuKalphaWavelengthNm;
  xrd_cmd->add_option("--curve", curve_path, "Two-column CSV: 2-theta (degrees), intensity")->required();
  xrd_cmd->add_option("--windows", windows_path, "Peak windows: 'lo hi label' per line")->required();
  xrd_cmd->add_option("--shape-factor", shape_factor, "Scherrer K")->capture_default_str();
  xrd_cmd->add_option("--wavelength", wavelength, "X-ray wavelength (nm)")->capture_default_str();
  xrd_cmd->add_option("--out", out_path, "Report file (default: standard output)");
  xrd_cmd->add_option("--fragment", fragment_path, "Write the dataset-row CSV fragment here");

  // train
  auto* train = app.add_subcommand("train", "Train one model per target and write a model directory");
  std::size_t background_cap = shap::kBackgroundCap;
  train->add_option("--data", data_path, "Dataset CSV")->required();
  train->add_option("--family", family, "lsboost | gpr | mlp")->capture_default_str();
  train->add_option("--config", config_path, "Model config JSON (one object or an array of five)");
  train->add_option("--outliers", outliers, "none | iqr[:m] | zscore[:t]")->capture_default_str();
  train->add_option("--folds", folds, "Cross-validation folds for the report (0 skips it)")->capture_default_str();
  train->add_option("--seed", seed)->capture_default_str();
  train->add_option("--background-cap", background_cap, "Rows kept for explanations")->capture_default_str();
  train->add_option("--out", model_dir, "Model directory")->required();

  // tune
  auto* tune = app.add_subcommand("tune", "Search hyperparameters with particle swarm optimization");
  std::size_t swarm_size = 10, iterations = 10;
  std::string target_key, trace_path;
  tune->add_option("--data", data_path, "Dataset CSV")->required();
  tune->add_option("--family", family, "lsboost | gpr | mlp")->capture_default_str();
  tune->add_option("--outliers", outliers, "none | iqr[:m] | zscore[:t]")->capture_default_str();
  tune->add_option("--folds", folds)->capture_default_str();
  tune->add_option("--seed", seed)->capture_default_str();
  tune->add_option("--swarm", swarm_size)->capture_default_str();
  tune->add_option("--iterations", iterations)->capture_default_str();
  tune->add_option("--target", target_key, "Tune for one target only (schema key)");
  tune->add_option("--out", out_path, "Best config JSON")->required();
  tune->add_option("--trace", trace_path, "Search trace, one line per evaluation");
  tune->add_option("--report", report_path, "Evaluation report JSON of the best config");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Cross-validate a model config");
  bool normalized_units = false;
  std::string violin_path;
  evaluate->add_option("--data", data_path, "Dataset CSV")->required();
  evaluate->add_option("--family", family, "lsboost | gpr | mlp")->capture_default_str();
  evaluate->add_option("--config", config_path, "Model config JSON");
  evaluate->add_option("--outliers", outliers, "none | iqr[:m] | zscore[:t]")->capture_default_str();
  evaluate->add_option("--folds", folds)->capture_default_str();
  evaluate->add_option("--seed", seed)->capture_default_str();
  evaluate->add_flag("--normalized-units", normalized_units, "Score in [0, 1] units instead of original units");
  evaluate->add_option("--json", report_path, "Write the report as JSON");
  evaluate->add_option("--violin", violin_path, "Write per-fold scores as CSV");

  // optimize
  auto* optimize = app.add_subcommand("optimize", "Multi-objective search over the trained models");
  std::size_t archive = 100;
  std::size_t mo_swarm = 40, mo_iterations = 500;
  std::vector<std::string> sense_args, bound_args;
  std::string summary_path;
  optimize->add_option("--model", model_dir, "Model directory")->required();
  optimize->add_option("--swarm", mo_swarm)->capture_default_str();
  optimize->add_option("--iterations", mo_iterations)->capture_default_str();
  optimize->add_option("--archive", archive)->capture_default_str();
  optimize->add_option("--seed", seed)->capture_default_str();
  optimize->add_option("--sense", sense_args, "target=maximize|minimize (repeatable)");
  optimize->add_option("--bound", bound_args, "feature=lo:hi (repeatable; default training bounds)");
  optimize->add_option("--out", out_path, "Pareto set CSV")->required();
  optimize->add_option("--trace", trace_path, "Archive size per iteration");
  optimize->add_option("--summary", summary_path, "Decision and objective ranges");

  // explain
  auto* explain_cmd = app.add_subcommand("explain", "Shapley attributions of the trained models");
  std::size_t permutations = 2048;
  std::string out_dir, target_arg = "all";
  explain_cmd->add_option("--model", model_dir, "Model directory")->required();
  explain_cmd->add_option("--data", data_path, "Dataset CSV of instances (default: the stored background rows)");
  explain_cmd->add_option("--target", target_arg, "Target key or 'all'")->capture_default_str();
  explain_cmd->add_option("--permutations", permutations, "Sampling size for non-tree models")->capture_default_str();
  explain_cmd->add_option("--seed", seed)->capture_default_str();
  explain_cmd->add_option("--out-dir", out_dir)->required();

  // stats
  auto* stats_cmd = app.add_subcommand("stats", "Spearman matrix, PCA, density and response grids");
  std::vector<std::string> kde_pairs{"reaction_temperature:conversion", "reaction_time:conversion",
                                     "reaction_temperature:h2", "steam_carbon:conversion", "steam_carbon:h2"};
  std::vector<std::string> surfaces;
  std::size_t grid_size = 64;
  bool raw_pca = false;
  std::string stats_outliers = "none";
  stats_cmd->add_option("--data", data_path, "Dataset CSV")->required();
  stats_cmd->add_option("--outliers", stats_outliers, "none | iqr[:m] | zscore[:t]")->capture_default_str();
  stats_cmd->add_option("--out-dir", out_dir)->required();
  stats_cmd->add_option("--kde", kde_pairs, "x_key:y_key pairs")->capture_default_str();
  stats_cmd->add_option("--grid", grid_size, "Points per grid axis")->capture_default_str();
  stats_cmd->add_flag("--raw-pca", raw_pca, "PCA on the covariance instead of the correlation matrix");
  stats_cmd->add_option("--model", model_dir, "Model directory for response grids");
  stats_cmd->add_option("--surface", surfaces, "feature_x:feature_y response grids (needs --model)");

  // serve
  auto* serve = app.add_subcommand("serve", "HTTP prediction service (bind address from TARML_BIND or --bind)");
  std::string bind_arg;
  std::size_t budget = 40000;
  serve->add_option("--model", model_dir, "Model directory")->required();
  serve->add_option("--bind", bind_arg, "host:port (overrides TARML_BIND; default 127.0.0.1:8080)");
  serve->add_option("--budget", budget, "Evaluation budget per optimize request")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    const auto schema = data::FeatureSchema::canonical();

    if (ingest->parsed()) {
      const auto clean_raw = data::read_dataset(data_path);
      const auto [clean, report] = data::remove_outliers(clean_raw, data::parse_outlier_policy(outliers));
      out << "rows: " << clean_raw.size() << ", removed: " << report.removed_rows.size()
          << ", kept: " << clean.size() << "\n";
      if (!out_path.empty()) write_file(out_path, data::serialize_dataset(clean));
      if (!report_path.empty()) write_file(report_path, report.to_text());
      if (!normalized_path.empty() || !scaling_path.empty()) {
        const auto [unit, scaling] = data::normalize(clean);
        if (!normalized_path.empty()) write_file(normalized_path, data::serialize_dataset(unit));
        if (!scaling_path.empty()) write_file(scaling_path, scaling_json(scaling, schema));
      }
    } else if (xrd_cmd->parsed()) {
      const auto curve = xrd::parse_curve(read_file(curve_path));
      const auto windows = xrd::parse_windows(read_file(windows_path));
      const auto report = xrd::analyze_curve(curve, windows, shape_factor, wavelength);
      if (out_path.empty()) {
        out << report.to_text();
      } else {
        write_file(out_path, report.to_text());
        out << "wrote " << out_path << "\n";
      }
      if (!fragment_path.empty()) write_file(fragment_path, report.to_row_fragment());
    } else if (train->parsed()) {
      const auto configs = load_configs(config_path, family);
      const auto clean = load_clean(data_path, outliers, out);
      const auto bundle = train_bundle(clean, configs, seed, background_cap);
      save_model_dir(bundle, model_dir);
      out << "wrote " << bundle.models.size() << " models to " << model_dir << "\n";
      if (folds > 0) {
        const auto [unit, scaling] = data::normalize(clean);
        const auto plan = data::kfold_split(clean.size(), folds, seed);
        const auto report = metrics::evaluate_cv({configs, {}, seed}, unit, plan, &scaling);
        write_file(fs::path(model_dir) / "eval.json", report.to_json());
        out << report.to_table();
      }
    } else if (tune->parsed()) {
      const auto clean = load_clean(data_path, outliers, out);
      const auto [unit, scaling] = data::normalize(clean);
      const auto plan = data::kfold_split(clean.size(), folds, seed);
      tuning::TuneOptions options;
      options.pso.swarm_size = swarm_size;
      options.pso.iterations = iterations;
      options.pso.seed = seed;
      if (!target_key.empty()) {
        const auto t = schema.find_target_key(target_key);
        if (!t) throw Error("unknown target \"" + target_key + "\"");
        options.targets = {*t};
      }
      const auto result = tuning::tune(tuning::default_space(models::parse_family(family)), unit, plan, options);
      write_file(out_path, models::config_to_json(result.best).dump(2) + "\n");
      if (!trace_path.empty()) write_file(trace_path, result.trace_to_text());
      if (!report_path.empty()) write_file(report_path, result.report.to_json());
      out << "best: " << models::describe(result.best) << "\nobjective (mean test RMSE, normalized): "
          << data::format_number(result.best_objective) << "\ndistinct configs trained: " << result.trainings << "\n";
    } else if (evaluate->parsed()) {
      const auto configs = load_configs(config_path, family);
      const auto clean = load_clean(data_path, outliers, out);
      const auto [unit, scaling] = data::normalize(clean);
      const auto plan = data::kfold_split(clean.size(), folds, seed);
      const auto report =
          metrics::evaluate_cv({configs, {}, seed}, unit, plan, normalized_units ? nullptr : &scaling);
      out << report.to_table();
      if (!report_path.empty()) write_file(report_path, report.to_json());
      if (!violin_path.empty()) write_file(violin_path, report.to_violin_csv());
    } else if (optimize->parsed()) {
      const auto bundle = load_model_dir(model_dir);
      swarm::MopsoParams params;
      params.pso.swarm_size = mo_swarm;
      params.pso.iterations = mo_iterations;
      params.pso.seed = seed;
      params.pso.evaluation = Exec::kParallel;
      params.archive_capacity = archive;
      for (std::size_t f = 0; f < data::kFeatureCount; ++f) params.pso.bounds.push_back(bundle.training_bounds(f));
      for (const auto& b : bound_args) {
        const auto [key, range] = split_pair(b, '=');
        const auto f = schema.find_feature_key(key);
        if (!f) throw Error("unknown feature \"" + key + "\" in --bound");
        const auto [lo, hi] = split_pair(range, ':');
        const auto l = data::parse_number(lo), h = data::parse_number(hi);
        if (!l || !h) throw Error("bad range in --bound " + b);
        params.pso.bounds[*f] = {*l, *h};
      }
      params.senses = {swarm::Sense::kMaximize, swarm::Sense::kMaximize, swarm::Sense::kMinimize,
                       swarm::Sense::kMinimize, swarm::Sense::kMinimize};
      for (const auto& s : sense_args) {
        const auto [key, sense] = split_pair(s, '=');
        const auto t = schema.find_target_key(key);
        if (!t) throw Error("unknown target \"" + key + "\" in --sense");
        if (sense != "maximize" && sense != "minimize") throw Error("sense must be maximize or minimize: " + s);
        params.senses[*t] = sense == "maximize" ? swarm::Sense::kMaximize : swarm::Sense::kMinimize;
      }
      const auto result = swarm::mopso(
          [&](std::span<const double> x) {
            std::vector<double> y;
            for (const auto& m : bundle.models) y.push_back(m.predict(x).value);
            return y;
          },
          params);
      std::vector<std::string> decision_names, objective_names;
      for (const auto& c : schema.features()) decision_names.push_back(c.name);
      for (const auto& c : schema.targets()) objective_names.push_back(c.name);
      write_file(out_path, swarm::pareto_to_csv(result.solutions, decision_names, objective_names));
      const auto summary = swarm::summarize(result.solutions);
      std::ostringstream text;
      for (std::size_t f = 0; f < summary.decision_ranges.size(); ++f) {
        text << schema.features()[f].name << ": " << data::format_number(summary.decision_ranges[f].min) << " - "
             << data::format_number(summary.decision_ranges[f].max) << "\n";
      }
      for (std::size_t t = 0; t < summary.objective_ranges.size(); ++t) {
        text << schema.targets()[t].name << ": " << data::format_number(summary.objective_ranges[t].min) << " - "
             << data::format_number(summary.objective_ranges[t].max) << "\n";
      }
      if (!summary_path.empty()) write_file(summary_path, text.str());
      if (!trace_path.empty()) {
        std::ostringstream trace;
        for (std::size_t i = 0; i < result.archive_sizes.size(); ++i) trace << i << ' ' << result.archive_sizes[i] << '\n';
        write_file(trace_path, trace.str());
      }
      out << result.solutions.size() << " Pareto solutions after " << result.evaluations << " evaluations\n"
          << text.str();
    } else if (explain_cmd->parsed()) {
      const auto bundle = load_model_dir(model_dir);
      if (bundle.background.rows == 0) throw Error("model directory " + model_dir + " has no background.csv");
      Matrix instances = bundle.background;
      if (!data_path.empty()) {
        const auto d = data::read_dataset(data_path);
        std::vector<std::size_t> rows(d.size());
        std::iota(rows.begin(), rows.end(), std::size_t{0});
        instances = metrics::feature_matrix(d, rows);
      }
      shap::SamplingOptions sampling;
      sampling.permutations = permutations;
      sampling.seed = seed;
      for (std::size_t t = 0; t < bundle.models.size(); ++t) {
        const auto& key = schema.targets()[t].key;
        if (target_arg != "all" && target_arg != key) continue;
        const auto explanations =
            shap::explain_batch(bundle.models[t], instances, bundle.background, Exec::kParallel, sampling);
        const auto summary = shap::summarize(explanations, schema);
        write_file(fs::path(out_dir) / ("shap_" + key + ".csv"), shap::explanations_to_csv(explanations, schema));
        write_file(fs::path(out_dir) / ("shap_summary_" + key + ".csv"), shap::summary_to_csv(summary, schema));
        out << key << ": top feature " << schema.features()[summary.order.front()].key;
        if (summary.operating_pct) {
          out << ", operating conditions " << data::format_number(*summary.operating_pct)
              << "%, catalyst properties " << data::format_number(*summary.catalyst_pct) << "%";
        }
        out << "\n";
      }
      if (target_arg != "all" && !schema.find_target_key(target_arg)) throw Error("unknown target \"" + target_arg + "\"");
    } else if (stats_cmd->parsed()) {
      const auto d = load_clean(data_path, stats_outliers, out);
      const fs::path dir(out_dir);
      const auto corr = stats::spearman_matrix(d, Exec::kParallel);
      write_file(dir / "spearman.csv", stats::correlation_to_csv(corr));
      std::vector<std::size_t> rows(d.size());
      std::iota(rows.begin(), rows.end(), std::size_t{0});
      Matrix all(d.size(), data::kColumnCount);
      for (std::size_t r = 0; r < d.size(); ++r) {
        for (std::size_t c = 0; c < data::kColumnCount; ++c) all(r, c) = d.rows[r].value(c);
      }
      std::vector<std::string> names;
      for (std::size_t c = 0; c < data::kColumnCount; ++c) names.push_back(schema.column(c).key);
      const auto pca = stats::pca(all, !raw_pca);
      write_file(dir / "pca.csv", stats::pca_to_csv(pca, names));
      for (const auto& pair : kde_pairs) {
        const auto [xk, yk] = split_pair(pair, ':');
        const auto xs = d.column(column_by_key(schema, xk));
        const auto ys = d.column(column_by_key(schema, yk));
        stats::GridSpec spec;
        spec.nx = spec.ny = grid_size;
        const auto g = stats::kde2d(xs, ys, spec, Exec::kParallel);
        write_file(dir / ("kde_" + xk + "_" + yk + ".csv"), stats::grid_to_csv(g.xs, g.ys, g.density));
      }
      if (!surfaces.empty()) {
        if (model_dir.empty()) throw Error("--surface needs --model");
        const auto bundle = load_model_dir(model_dir);
        for (const auto& pair : surfaces) {
          const auto [xk, yk] = split_pair(pair, ':');
          const auto fx = schema.find_feature_key(xk), fy = schema.find_feature_key(yk);
          if (!fx || !fy) throw Error("--surface takes two feature keys, got " + pair);
          for (std::size_t t = 0; t < bundle.models.size(); ++t) {
            const auto g = stats::model_response_grid(bundle.models[t], d, *fx, *fy, grid_size, grid_size,
                                                      Exec::kParallel);
            write_file(dir / ("response_" + schema.targets()[t].key + "_" + xk + "_" + yk + ".csv"),
                       stats::grid_to_csv(g.xs, g.ys, g.values));
          }
        }
      }
      out << "PC1-3 explain " << data::format_number(pca.fractions[0] + pca.fractions[1] + pca.fractions[2])
          << " of the variance; wrote " << out_dir << "\n";
    } else if (serve->parsed()) {
      ServiceOptions options;
      options.optimize_budget = budget;
      PredictionService service(fs::path(model_dir), options);
      const BindAddress address = bind_arg.empty() ? resolve_bind(BindAddress{}) : parse_bind(bind_arg);
      HttpServer server(service);
      const int port = server.bind(address.host, address.port);
      out << "listening on " << address.host << ":" << port << std::endl;
      if (!server.run()) throw Error("server stopped with an error");
    }
  } catch (const std::exception& e) {
    err << "tarml " << command << ": " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace tarml::app
