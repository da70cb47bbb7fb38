#include "csv.hpp"

#include "aqua/kb.hpp"
#include "aqua/text.hpp"

namespace aqua::kb::detail {

std::optional<CsvRow> CsvReader::next() {
  std::string raw;
  while (std::getline(in_, raw)) {
    ++line_;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    auto stripped = trim(raw);
    if (stripped.empty() || stripped.front() == '#') continue;

    CsvRow row;
    row.line = line_;
    std::string field;
    bool quoted = false;
    bool was_quoted = false;
    for (std::size_t i = 0; i < raw.size(); ++i) {
      char c = raw[i];
      if (quoted) {
        if (c == '"') {
          if (i + 1 < raw.size() && raw[i + 1] == '"') {
            field += '"';
            ++i;
          } else {
            quoted = false;
          }
        } else {
          field += c;
        }
      } else if (c == '"' && trim(field).empty()) {
        field.clear();
        quoted = true;
        was_quoted = true;
      } else if (c == ',') {
        row.fields.push_back(was_quoted ? field : std::string(trim(field)));
        field.clear();
        was_quoted = false;
      } else {
        field += c;
      }
    }
    if (quoted) throw LoadError(line_, "", "line " + std::to_string(line_) + ": unterminated quoted field");
    row.fields.push_back(was_quoted ? field : std::string(trim(field)));
    return row;
  }
  return std::nullopt;
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos && trim(field) == field) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace aqua::kb::detail
