#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "tarml/data/dataset.hpp"
#include "tarml/matrix.hpp"
#include "tarml/rng.hpp"

namespace tarml::test {

// Canonical header line of the 16-column dataset CSV.
inline std::string header() {
  const auto schema = data::FeatureSchema::canonical();
  std::string h;
  for (std::size_t c = 0; c < data::kColumnCount; ++c) {
    if (c) h += ',';
    h += schema.column(c).name;
  }
  return h;
}

inline std::string csv_row(const std::vector<double>& values) {
  std::string line;
  for (std::size_t c = 0; c < values.size(); ++c) {
    if (c) line += ',';
    line += data::format_number(values[c]);
  }
  return line;
}

inline Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng, double lo = 0.0, double hi = 1.0) {
  Matrix m(rows, cols);
  for (auto& v : m.data) v = rng.uniform(lo, hi);
  return m;
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("tarml_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace tarml::test
