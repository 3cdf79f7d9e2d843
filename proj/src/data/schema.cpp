#include "tarml/data/schema.hpp"

#include <cstdint>
#include <cstdio>
#include <utility>

#include "tarml/error.hpp"

namespace tarml::data {

std::string_view to_string(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::kCatalystProperty:
      return "catalyst-property";
    case FeatureKind::kOperatingCondition:
      return "operating-condition";
    case FeatureKind::kTarget:
      return "target";
  }
  return "unknown";
}

FeatureSchema FeatureSchema::canonical() {
  using K = FeatureKind;
  FeatureSchema s;
  s.features_ = {{
      {"crystal_size", "Average crystal size (nm)", "nm", K::kCatalystProperty, {}},
      {"crystallinity", "Crystallinity index (%)", "%", K::kCatalystProperty, {}},
      {"bet_area", "BET surface area (m2/g)", "m2/g", K::kCatalystProperty, {}},
      {"pore_volume", "Pore volume (cm3/g)", "cm3/g", K::kCatalystProperty, {}},
      {"catalyst_loading", "Catalyst loading (g)", "g", K::kOperatingCondition, {}},
      {"gas_flow", "Carrier gas flow rate (mL/min)", "mL/min", K::kOperatingCondition, {}},
      {"steam_carbon", "Steam-to-carbon molar ratio (-)", "-", K::kOperatingCondition, {}},
      {"gas_temperature", "Carrier gas initial temperature (°C)", "°C",
       K::kOperatingCondition, {}},
      {"reaction_temperature", "Reaction temperature (°C)", "°C", K::kOperatingCondition, {}},
      {"reaction_time", "Reaction time (min)", "min", K::kOperatingCondition, {}},
      {"reactor_diameter", "Reactor inner diameter (mm)", "mm", K::kOperatingCondition, {}},
  }};
  s.targets_ = {{
      {"conversion", "Toluene conversion (%)", "%", K::kTarget, {}},
      {"h2", "H2 (mol%)", "mol%", K::kTarget, {}},
      {"co", "CO (mol%)", "mol%", K::kTarget, {}},
      {"co2", "CO2 (mol%)", "mol%", K::kTarget, {}},
      {"ch4", "CH4 (mol%)", "mol%", K::kTarget, {}},
  }};
  return s;
}

const ColumnDescriptor& FeatureSchema::column(std::size_t i) const {
  if (i < kFeatureCount) return features_[i];
  if (i < kColumnCount) return targets_[i - kFeatureCount];
  throw SchemaError("column index " + std::to_string(i) + " out of range");
}

ColumnDescriptor& FeatureSchema::mutable_column(std::size_t i) {
  return const_cast<ColumnDescriptor&>(std::as_const(*this).column(i));
}

std::optional<std::size_t> FeatureSchema::find_column(std::string_view name) const {
  for (std::size_t i = 0; i < kColumnCount; ++i) {
    if (column(i).name == name) return i;
  }
  return std::nullopt;
}

std::optional<std::size_t> FeatureSchema::find_feature_key(std::string_view key) const {
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    if (features_[i].key == key) return i;
  }
  return std::nullopt;
}

std::optional<std::size_t> FeatureSchema::find_target_key(std::string_view key) const {
  for (std::size_t i = 0; i < kTargetCount; ++i) {
    if (targets_[i].key == key) return i;
  }
  return std::nullopt;
}

bool FeatureSchema::is_percentage(std::size_t column_index) const {
  const auto& unit = column(column_index).unit;
  return unit == "%" || unit == "mol%";
}

std::string FeatureSchema::fingerprint() const {
  // FNV-1a 64
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::string_view text) {
    for (unsigned char c : text) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    h ^= 0x1f;
    h *= 0x100000001b3ULL;
  };
  for (std::size_t i = 0; i < kColumnCount; ++i) {
    const auto& c = column(i);
    mix(c.key);
    mix(c.name);
    mix(c.unit);
    mix(to_string(c.kind));
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace tarml::data
