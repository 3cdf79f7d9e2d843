#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace tarml::data {

inline constexpr std::size_t kFeatureCount = 11;
inline constexpr std::size_t kTargetCount = 5;
inline constexpr std::size_t kColumnCount = kFeatureCount + kTargetCount;

enum class FeatureKind { kCatalystProperty, kOperatingCondition, kTarget };

std::string_view to_string(FeatureKind kind);

struct Bounds {
  double min = 0.0;
  double max = 0.0;

  bool contains(double v) const { return v >= min && v <= max; }
  double span() const { return max - min; }

  friend bool operator==(const Bounds&, const Bounds&) = default;
};

struct ColumnDescriptor {
  std::string key;   // short identifier used on the wire and in file names
  std::string name;  // exact CSV header spelling, unit included
  std::string unit;
  FeatureKind kind = FeatureKind::kOperatingCondition;
  Bounds bounds;     // observed bounds; zero-width until filled from data
};

// The 11 input features and 5 responses of a tar steam-reforming experiment in
// their canonical order. Bounds are observed values, filled by
// Dataset::observed_schema.
class FeatureSchema {
 public:
  static FeatureSchema canonical();

  const std::array<ColumnDescriptor, kFeatureCount>& features() const { return features_; }
  const std::array<ColumnDescriptor, kTargetCount>& targets() const { return targets_; }

  // Column i of the 16-wide layout: features first, then targets.
  const ColumnDescriptor& column(std::size_t i) const;
  ColumnDescriptor& mutable_column(std::size_t i);

  std::optional<std::size_t> find_column(std::string_view name) const;
  std::optional<std::size_t> find_feature_key(std::string_view key) const;
  std::optional<std::size_t> find_target_key(std::string_view key) const;

  bool is_percentage(std::size_t column) const;

  // Stable hash over keys, names, units and kinds (bounds excluded). Two
  // schemas with the same fingerprint describe the same column layout.
  std::string fingerprint() const;

 private:
  std::array<ColumnDescriptor, kFeatureCount> features_;
  std::array<ColumnDescriptor, kTargetCount> targets_;
};

}  // namespace tarml::data
