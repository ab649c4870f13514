#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace losflow::csv {

using Row = std::vector<std::string>;

/// Comma-separated input with a header row. Quoted fields may contain commas,
/// doubled quotes and newlines. A UTF-8 BOM on the first line is skipped.
struct Document {
  Row header;
  std::vector<Row> rows;

  /// Column index by name, or std::nullopt.
  std::optional<std::size_t> column(std::string_view name) const;
};

Document read(std::istream& in);
Document read_file(const std::string& path);

/// Quotes a field if it contains a comma, quote or newline.
std::string escape(std::string_view field);
void write_row(std::ostream& out, const Row& row);

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double value);

/// Strict full-string parse; std::nullopt on any trailing garbage or empty input.
std::optional<double> parse_double(std::string_view text);

}  // namespace losflow::csv
