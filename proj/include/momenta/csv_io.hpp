#pragma once

// Minimal CSV reading/writing shared by the experiment outputs and the
// plotting command. Numbers are printed with a fixed format so repeated runs
// produce byte-identical files.

#include <cstddef>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace momenta {

/// "%.12g", with NaN and infinities spelled nan, inf, -inf.
std::string format_number(double x);

std::vector<std::string> split_csv_line(std::string_view line);

/// Parses a whole field as a double; rejects trailing garbage.
bool parse_double(std::string_view field, double& out);

/// A parsed CSV file: comment lines (starting with '#') are kept apart.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> row_lines;  // 1-based source line of each row
  std::vector<std::string> comments;   // without the leading '#'

  /// Column index by name, or -1.
  long column(std::string_view name) const;
};

/// Reads a CSV stream; blank lines are skipped. Throws std::runtime_error when
/// the stream has no header line.
CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::string& path);

std::string join_header(const std::vector<std::string>& names);

}  // namespace momenta
