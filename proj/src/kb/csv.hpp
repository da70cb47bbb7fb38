#pragma once

#include <istream>
#include <optional>
#include <string>
#include <vector>

namespace aqua::kb::detail {

// One CSV record plus the physical line it came from.
struct CsvRow {
  std::size_t line = 0;
  std::vector<std::string> fields;
};

// Reads records from a stream, skipping blank lines and lines whose first
// non-space character is '#'. Fields may be double-quoted ("" escapes a quote).
class CsvReader {
public:
  explicit CsvReader(std::istream& in) : in_(in) {}

  std::optional<CsvRow> next();
  std::size_t line() const noexcept { return line_; }

private:
  std::istream& in_;
  std::size_t line_ = 0;
};

std::string csv_escape(const std::string& field);

}  // namespace aqua::kb::detail
