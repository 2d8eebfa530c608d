#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace webpar::csv {

// A parsed CSV file: one header row, then data rows. Quoted fields with
// embedded commas, quotes ("") and newlines are supported.
class Table {
 public:
  static Table parse(std::string_view text);
  static Table read(const std::filesystem::path& path);

  const std::vector<std::string>& header() const { return header_; }
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }

  std::optional<std::size_t> column(std::string_view name) const;
  // Throws Error(schema) when the column is absent.
  std::size_t require_column(std::string_view name) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

std::string escape(std::string_view field);

// Shortest round-trip decimal representation.
std::string format_double(double value);

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  Writer& field(std::string_view value);
  Writer& field(double value);
  Writer& field(long long value);
  Writer& field(unsigned long long value);
  Writer& field(unsigned value) { return field(static_cast<unsigned long long>(value)); }
  Writer& field(int value) { return field(static_cast<long long>(value)); }
  Writer& field(std::size_t value) { return field(static_cast<unsigned long long>(value)); }
  Writer& field(const char* value) { return field(std::string_view(value)); }
  Writer& field(const std::string& value) { return field(std::string_view(value)); }
  Writer& empty();
  void end_row();

  void row(std::initializer_list<std::string_view> fields);

 private:
  std::ostream& out_;
  bool first_ = true;
};

double parse_double(std::string_view text, std::string_view what);
long long parse_int(std::string_view text, std::string_view what);

}  // namespace webpar::csv
