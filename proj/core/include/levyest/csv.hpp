#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace levyest::csv {

/// Shortest round-trip decimal form; "nan" for NaN.
std::string format(double value);

std::vector<std::string_view> split(std::string_view line, char sep = ',');
std::string_view trim(std::string_view s);

/// Throws ParseError carrying the line number.
double parse_double(std::string_view field, std::size_t line);
bool try_parse_double(std::string_view field, double& out);

/// Writes a row of already-formatted fields.
void write_row(std::ostream& out, const std::vector<std::string>& fields);

}  // namespace levyest::csv
