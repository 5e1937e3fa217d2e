#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace fairaudit {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// RFC 4180-style parser: quoted fields, doubled quotes, CR/LF line ends.
/// Throws DataError on an empty stream (no header row).
CsvTable parse_csv(std::istream& in);

/// Writes one row, quoting fields that contain delimiters, quotes or newlines.
void write_csv_row(std::ostream& out, std::span<const std::string> fields);

}  // namespace fairaudit
