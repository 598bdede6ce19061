#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace agesynth::csv {

using Row = std::vector<std::string>;

/// Minimal RFC 4180 reader: quoted fields, doubled quotes, CRLF tolerated.
/// The header row is returned as the first row.
std::vector<Row> read_file(const std::filesystem::path& path);
std::vector<Row> parse(std::string_view text);

void write_row(std::ostream& out, const Row& row);

/// Shortest decimal that round-trips to the same double.
std::string format_double(double value);
double parse_double(std::string_view text, std::string_view what);
long long parse_int(std::string_view text, std::string_view what);
std::optional<double> parse_optional_double(std::string_view text, std::string_view what);

/// Maps header names to column indices; throws FormatError when a required column is absent.
class Header {
 public:
  explicit Header(const Row& header);
  [[nodiscard]] std::size_t index(std::string_view name) const;
  [[nodiscard]] std::optional<std::size_t> find(std::string_view name) const;

 private:
  Row names_;
};

}  // namespace agesynth::csv
