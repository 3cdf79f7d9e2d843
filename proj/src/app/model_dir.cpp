#include "tarml/app/model_dir.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "tarml/data/csv.hpp"
#include "tarml/data/dataset.hpp"
#include "tarml/error.hpp"

namespace tarml::app {

namespace fs = std::filesystem;

std::vector<bool> ModelBundle::extrapolation(std::span<const double> x) const {
  if (x.size() != data::kFeatureCount) throw SchemaError("expected 11 feature values");
  std::vector<bool> flags(x.size());
  for (std::size_t f = 0; f < x.size(); ++f) flags[f] = !training_bounds(f).contains(x[f]);
  return flags;
}

ModelBundle make_bundle(std::vector<models::Regressor> models, Matrix background) {
  ModelBundle b;
  b.schema = data::FeatureSchema::canonical();
  if (models.size() != data::kTargetCount) {
    throw Error("a model set needs " + std::to_string(data::kTargetCount) + " models, got " +
                std::to_string(models.size()));
  }
  b.fingerprint = b.schema.fingerprint();
  for (std::size_t t = 0; t < models.size(); ++t) {
    const auto& m = models[t];
    const auto& key = b.schema.targets()[t].key;
    if (m.target() != key) throw Error("model " + std::to_string(t) + " is for \"" + m.target() + "\", expected " + key);
    if (m.schema_fingerprint() != b.fingerprint) {
      throw SchemaError("model " + key + " was trained on schema " + m.schema_fingerprint() + ", expected " +
                        b.fingerprint);
    }
    if (m.input_width() != data::kFeatureCount) throw SchemaError("model " + key + " does not take 11 features");
    if (!(m.scaling().features == models.front().scaling().features)) {
      throw SchemaError("model " + key + " was trained with different feature bounds");
    }
  }
  for (std::size_t f = 0; f < data::kFeatureCount; ++f) {
    b.schema.mutable_column(f).bounds = models.front().scaling().features[f];
  }
  for (std::size_t t = 0; t < data::kTargetCount; ++t) {
    b.schema.mutable_column(data::kFeatureCount + t).bounds = models[t].scaling().target;
  }
  if (background.rows > 0 && background.cols != data::kFeatureCount) {
    throw SchemaError("background rows must have 11 columns");
  }
  b.models = std::move(models);
  b.background = std::move(background);
  return b;
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

std::string background_to_csv(const Matrix& rows) {
  const auto schema = data::FeatureSchema::canonical();
  std::ostringstream out;
  for (std::size_t f = 0; f < data::kFeatureCount; ++f) out << (f ? "," : "") << schema.features()[f].key;
  out << '\n';
  for (std::size_t r = 0; r < rows.rows; ++r) {
    for (std::size_t f = 0; f < rows.cols; ++f) out << (f ? "," : "") << data::format_number(rows(r, f));
    out << '\n';
  }
  return out.str();
}

Matrix parse_background_csv(std::string_view text) {
  const auto schema = data::FeatureSchema::canonical();
  const auto lines = data::split_lines(text);
  if (lines.empty()) throw ParseError("background file is empty", 0, 0);
  const auto header = data::split_csv_row(lines.front().text, ',');
  if (header.size() != data::kFeatureCount) throw ParseError("background header must name the 11 feature keys", lines.front().number, 0);
  for (std::size_t f = 0; f < header.size(); ++f) {
    if (header[f] != schema.features()[f].key) {
      throw ParseError("background column " + std::to_string(f + 1) + " should be " + schema.features()[f].key,
                       lines.front().number, f + 1);
    }
  }
  Matrix out(lines.size() - 1, data::kFeatureCount);
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto cells = data::split_csv_row(lines[r].text, ',');
    if (cells.size() != data::kFeatureCount) throw ParseError("background row has the wrong number of cells", lines[r].number, 0);
    for (std::size_t f = 0; f < cells.size(); ++f) {
      const auto v = data::parse_number(cells[f]);
      if (!v || !std::isfinite(*v)) {
        throw ParseError("background value \"" + std::string(cells[f]) + "\" is not a finite number", lines[r].number,
                         f + 1);
      }
      out(r - 1, f) = *v;
    }
  }
  return out;
}

void save_model_dir(const ModelBundle& bundle, const fs::path& dir) {
  fs::create_directories(dir);
  for (std::size_t t = 0; t < bundle.models.size(); ++t) {
    models::save_artifact_file(bundle.models[t], (dir / (bundle.schema.targets()[t].key + ".v1")).string());
  }
  write_text(dir / "schema", bundle.fingerprint + "\n");
  if (bundle.background.rows > 0) write_text(dir / "background.csv", background_to_csv(bundle.background));
}

ModelBundle load_model_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error("model directory " + dir.string() + " does not exist");
  const auto schema = data::FeatureSchema::canonical();
  std::string recorded = read_text(dir / "schema");
  while (!recorded.empty() && (recorded.back() == '\n' || recorded.back() == '\r')) recorded.pop_back();
  if (recorded != schema.fingerprint()) {
    throw SchemaError("model directory schema " + recorded + " does not match this build's schema " +
                      schema.fingerprint());
  }
  std::vector<models::Regressor> loaded;
  for (const auto& target : schema.targets()) {
    const auto path = dir / (target.key + ".v1");
    try {
      loaded.push_back(models::load_artifact_file(path.string()));
    } catch (const std::exception& e) {
      throw Error(path.string() + ": " + e.what());
    }
  }
  Matrix background;
  if (fs::exists(dir / "background.csv")) background = parse_background_csv(read_text(dir / "background.csv"));
  return make_bundle(std::move(loaded), std::move(background));
}

}  // namespace tarml::app
