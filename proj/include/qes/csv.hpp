#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace qes::csv {

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double x);
double parse_double(std::string_view s);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// Comma-separated, '\n' line endings, no quoting (cells never contain commas).
void write(std::ostream& out, const Table& table);
Table read(std::istream& in);

}  // namespace qes::csv
