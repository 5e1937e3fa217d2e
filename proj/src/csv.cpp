#include "fairaudit/csv.hpp"

#include <istream>
#include <ostream>

#include "fairaudit/errors.hpp"

namespace fairaudit {

namespace {

// Reads one logical CSV record (quotes may span physical lines).
// Returns false on end of input with no data consumed.
bool read_record(std::istream& in, std::vector<std::string>& fields) {
  fields.clear();
  std::string field;
  bool in_quotes = false;
  bool any = false;
  int c;
  while ((c = in.get()) != EOF) {
    any = true;
    const char ch = static_cast<char>(c);
    if (in_quotes) {
      if (ch == '"') {
        if (in.peek() == '"') {
          field.push_back('"');
          in.get();
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(ch);
      }
      continue;
    }
    switch (ch) {
      case '"':
        in_quotes = true;
        break;
      case ',':
        fields.push_back(std::move(field));
        field.clear();
        break;
      case '\r':
        if (in.peek() == '\n') in.get();
        [[fallthrough]];
      case '\n':
        fields.push_back(std::move(field));
        return true;
      default:
        field.push_back(ch);
    }
  }
  if (!any) return false;
  fields.push_back(std::move(field));
  return true;
}

bool needs_quoting(const std::string& s) {
  return s.find_first_of(",\"\r\n") != std::string::npos;
}

}  // namespace

CsvTable parse_csv(std::istream& in) {
  CsvTable table;
  std::vector<std::string> fields;
  if (!read_record(in, fields)) {
    throw DataError("empty input: no header row", "empty_input");
  }
  table.header = fields;
  while (read_record(in, fields)) {
    // A lone trailing newline yields one empty field; skip blank records.
    if (fields.size() == 1 && fields[0].empty()) continue;
    table.rows.push_back(fields);
  }
  return table;
}

void write_csv_row(std::ostream& out, std::span<const std::string> fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) out << ',';
    const std::string& f = fields[i];
    if (needs_quoting(f)) {
      out << '"';
      for (char ch : f) {
        if (ch == '"') out << '"';
        out << ch;
      }
      out << '"';
    } else {
      out << f;
    }
  }
  out << '\n';
}

}  // namespace fairaudit
