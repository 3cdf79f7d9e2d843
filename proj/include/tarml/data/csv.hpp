#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace tarml::data {

struct Line {
  std::size_t number;  // 1-based
  std::string_view text;
};

// Non-blank lines with CR stripped; a leading UTF-8 BOM is skipped.
std::vector<Line> split_lines(std::string_view text);

// RFC 4180 style: double quotes delimit cells that contain commas, and "" is an
// escaped quote. Unquoted cells keep their text verbatim.
std::vector<std::string> split_csv_row(std::string_view line, char delimiter = ',');

std::string quote_csv_cell(std::string_view cell);

}  // namespace tarml::data
