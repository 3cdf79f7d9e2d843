#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tarml/data/schema.hpp"

namespace tarml::data {

struct Sample {
  std::array<double, kFeatureCount> features{};
  std::array<double, kTargetCount> targets{};
  std::string source;

  // Column i of the 16-wide layout.
  double value(std::size_t column) const {
    return column < kFeatureCount ? features[column] : targets[column - kFeatureCount];
  }
  double& value(std::size_t column) {
    return column < kFeatureCount ? features[column] : targets[column - kFeatureCount];
  }

  friend bool operator==(const Sample&, const Sample&) = default;
};

struct Dataset {
  FeatureSchema schema = FeatureSchema::canonical();
  std::vector<Sample> rows;

  std::size_t size() const { return rows.size(); }
  bool empty() const { return rows.empty(); }

  std::vector<double> column(std::size_t index) const;
  // Row-major n x 11 copy of the features.
  std::vector<double> feature_matrix() const;

  Dataset subset(std::span<const std::size_t> indices) const;

  // Copy of the schema with every column's bounds set to the observed
  // min/max over the rows.
  FeatureSchema observed_schema() const;
};

bool operator==(const Dataset& a, const Dataset& b);

// Comma-separated, period decimal, header naming all 16 canonical columns in
// any order, plus an optional "source" column. Values must be finite, and
// percentage columns must lie in [0, 100].
Dataset parse_dataset(std::string_view text, const FeatureSchema& schema = FeatureSchema::canonical());
Dataset read_dataset(const std::string& path);

// Canonical column order, shortest round-trip number formatting.
std::string serialize_dataset(const Dataset& d);
void write_dataset(const Dataset& d, const std::string& path);

// Decimal or exponent notation, surrounding blanks allowed. Absent when the
// cell is not a number. "inf" and "nan" parse; callers check finiteness.
std::optional<double> parse_number(std::string_view cell);

// Shortest text that parses back to exactly `v`.
std::string format_number(double v);

}  // namespace tarml::data
