#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vbrisk::csv {

using Row = std::vector<std::string>;

/// Parses RFC-4180 text: comma separated, double-quote quoting with "" escapes,
/// CRLF or LF line endings, newlines permitted inside quoted fields.
/// Throws Errc::format on an unterminated quote.
std::vector<Row> parse(std::string_view text);

std::vector<Row> read_file(const std::string& path);

/// Quotes a field only when it contains a comma, quote, CR or LF.
std::string escape(std::string_view field);

void write_row(std::ostream& out, const Row& row);

/// Header lookup helper over the first row of a table.
class Header {
 public:
  explicit Header(const Row& names);

  std::optional<std::size_t> find(std::string_view name) const;

  /// Throws Errc::validation naming the missing column.
  std::size_t require(std::string_view name) const;

 private:
  Row names_;
};

}  // namespace vbrisk::csv
