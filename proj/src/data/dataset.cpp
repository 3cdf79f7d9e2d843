#include "tarml/data/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>

#include "tarml/error.hpp"
#include "tarml/data/csv.hpp"

namespace tarml::data {

std::vector<double> Dataset::column(std::size_t index) const {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.value(index));
  return out;
}

std::vector<double> Dataset::feature_matrix() const {
  std::vector<double> out;
  out.reserve(rows.size() * kFeatureCount);
  for (const auto& r : rows) out.insert(out.end(), r.features.begin(), r.features.end());
  return out;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out{schema, {}};
  out.rows.reserve(indices.size());
  for (std::size_t i : indices) out.rows.push_back(rows.at(i));
  return out;
}

FeatureSchema Dataset::observed_schema() const {
  FeatureSchema s = schema;
  if (rows.empty()) return s;
  for (std::size_t c = 0; c < kColumnCount; ++c) {
    Bounds b{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (const auto& r : rows) {
      b.min = std::min(b.min, r.value(c));
      b.max = std::max(b.max, r.value(c));
    }
    s.mutable_column(c).bounds = b;
  }
  return s;
}

bool operator==(const Dataset& a, const Dataset& b) {
  return a.schema.fingerprint() == b.schema.fingerprint() && a.rows == b.rows;
}

std::string format_number(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw Error("cannot format number");
  return std::string(buf, end);
}

std::optional<double> parse_number(std::string_view cell) {
  while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
  while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t')) cell.remove_suffix(1);
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  if (cell.empty()) return std::nullopt;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc{} || ptr != cell.data() + cell.size()) return std::nullopt;
  return v;
}

Dataset parse_dataset(std::string_view text, const FeatureSchema& schema) {
  const auto lines = split_lines(text);
  if (lines.empty()) throw ParseError("empty input: no header row", 1, 0);

  const auto header = split_csv_row(lines.front().text);
  std::array<std::size_t, kColumnCount> position{};
  std::optional<std::size_t> source_position;
  for (std::size_t c = 0; c < kColumnCount; ++c) {
    const auto& want = schema.column(c).name;
    std::optional<std::size_t> found;
    for (std::size_t h = 0; h < header.size(); ++h) {
      if (header[h] == want) found = h;
    }
    if (!found) throw SchemaError("missing required column \"" + want + "\"");
    position[c] = *found;
  }
  for (std::size_t h = 0; h < header.size(); ++h) {
    if (header[h] == "source") source_position = h;
  }

  Dataset d{schema, {}};
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const std::size_t row_no = lines[li].number;
    const auto cells = split_csv_row(lines[li].text);
    Sample s;
    for (std::size_t c = 0; c < kColumnCount; ++c) {
      const std::size_t p = position[c];
      const auto& name = schema.column(c).name;
      if (p >= cells.size() || cells[p].empty()) {
        throw ParseError("row " + std::to_string(row_no) + ", column \"" + name + "\": missing value",
                         row_no, p + 1);
      }
      const auto v = parse_number(cells[p]);
      if (!v || !std::isfinite(*v)) {
        throw ParseError("row " + std::to_string(row_no) + ", column \"" + name +
                             "\": non-numeric value \"" + cells[p] + "\"",
                         row_no, p + 1);
      }
      if (schema.is_percentage(c) && (*v < 0.0 || *v > 100.0)) {
        throw ParseError("row " + std::to_string(row_no) + ", column \"" + name + "\": value " +
                             cells[p] + " outside [0, 100]",
                         row_no, p + 1);
      }
      s.value(c) = *v;
    }
    if (source_position && *source_position < cells.size()) s.source = cells[*source_position];
    d.rows.push_back(std::move(s));
  }
  if (d.rows.empty()) throw ParseError("empty body: header present but no data rows", 2, 0);
  return d;
}

Dataset read_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open dataset file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_dataset(buf.str());
}

std::string serialize_dataset(const Dataset& d) {
  std::string out;
  bool any_source = false;
  for (const auto& r : d.rows) any_source = any_source || !r.source.empty();
  for (std::size_t c = 0; c < kColumnCount; ++c) {
    if (c) out += ',';
    out += quote_csv_cell(d.schema.column(c).name);
  }
  if (any_source) out += ",source";
  out += '\n';
  for (const auto& r : d.rows) {
    for (std::size_t c = 0; c < kColumnCount; ++c) {
      if (c) out += ',';
      out += format_number(r.value(c));
    }
    if (any_source) {
      out += ',';
      out += quote_csv_cell(r.source);
    }
    out += '\n';
  }
  return out;
}

void write_dataset(const Dataset& d, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write dataset file: " + path);
  out << serialize_dataset(d);
}

}  // namespace tarml::data
