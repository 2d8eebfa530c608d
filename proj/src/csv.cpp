#include "webpar/csv.hpp"

#include <charconv>
#include <limits>
#include <fstream>
#include <sstream>

#include "webpar/error.hpp"

namespace webpar {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::empty_document: return "empty document";
    case ErrorKind::configuration: return "configuration error";
    case ErrorKind::schema: return "schema error";
    case ErrorKind::value: return "value error";
    case ErrorKind::duplicate: return "duplicate error";
    case ErrorKind::aggregation: return "aggregation error";
    case ErrorKind::baseline: return "baseline error";
    case ErrorKind::degenerate_measurement: return "degenerate measurement";
    case ErrorKind::degenerate_labels: return "degenerate labels";
    case ErrorKind::undefined_correlation: return "undefined correlation";
    case ErrorKind::input: return "input error";
    case ErrorKind::report: return "report error";
    case ErrorKind::io: return "i/o error";
    case ErrorKind::usage: return "usage error";
  }
  return "error";
}

namespace csv {

namespace {

std::vector<std::vector<std::string>> split_records(std::string_view text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;

  auto finish_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto finish_record = [&] {
    finish_field();
    // A line holding nothing at all is skipped rather than read as one empty field.
    if (!(record.size() == 1 && record.front().empty())) records.push_back(std::move(record));
    record.clear();
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field_started && field.empty()) {
          in_quotes = true;
          field_started = true;
        } else {
          field.push_back(c);
        }
        break;
      case ',':
        finish_field();
        break;
      case '\r':
        break;
      case '\n':
        finish_record();
        break;
      default:
        field.push_back(c);
        field_started = true;
    }
  }
  if (in_quotes) throw Error(ErrorKind::schema, "unterminated quoted CSV field");
  if (!field.empty() || !record.empty()) finish_record();
  return records;
}

}  // namespace

Table Table::parse(std::string_view text) {
  auto records = split_records(text);
  if (records.empty()) throw Error(ErrorKind::schema, "CSV input has no header row");
  Table table;
  table.header_ = std::move(records.front());
  for (auto& name : table.header_) {
    while (!name.empty() && (name.back() == ' ' || name.back() == '\t')) name.pop_back();
    while (!name.empty() && (name.front() == ' ' || name.front() == '\t')) name.erase(name.begin());
  }
  for (std::size_t r = 1; r < records.size(); ++r) {
    auto& row = records[r];
    if (row.size() > table.header_.size()) {
      throw Error(ErrorKind::schema, "CSV row " + std::to_string(r + 1) + " has " +
                                         std::to_string(row.size()) + " fields, header has " +
                                         std::to_string(table.header_.size()));
    }
    row.resize(table.header_.size());
    table.rows_.push_back(std::move(row));
  }
  return table;
}

Table Table::read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

std::optional<std::size_t> Table::column(std::string_view name) const {
  for (std::size_t i = 0; i < header_.size(); ++i) {
    if (header_[i] == name) return i;
  }
  return std::nullopt;
}

std::size_t Table::require_column(std::string_view name) const {
  if (auto idx = column(name)) return *idx;
  throw Error(ErrorKind::schema, "missing required column '" + std::string(name) + "'");
}

std::string escape(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc()) return "nan";
  return std::string(buf, ptr);
}

Writer& Writer::field(std::string_view value) {
  if (!first_) out_ << ',';
  out_ << escape(value);
  first_ = false;
  return *this;
}

Writer& Writer::field(double value) { return field(std::string_view(format_double(value))); }

Writer& Writer::field(long long value) { return field(std::string_view(std::to_string(value))); }

Writer& Writer::field(unsigned long long value) {
  return field(std::string_view(std::to_string(value)));
}

Writer& Writer::empty() { return field(std::string_view()); }

void Writer::end_row() {
  out_ << '\n';
  first_ = true;
}

void Writer::row(std::initializer_list<std::string_view> fields) {
  for (auto f : fields) field(f);
  end_row();
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

}  // namespace

double parse_double(std::string_view text, std::string_view what) {
  text = trim(text);
  if (text == "inf" || text == "+inf" || text == "infinity") return std::numeric_limits<double>::infinity();
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error(ErrorKind::value, "invalid number '" + std::string(text) + "' for " + std::string(what));
  }
  return value;
}

long long parse_int(std::string_view text, std::string_view what) {
  text = trim(text);
  long long value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error(ErrorKind::value, "invalid integer '" + std::string(text) + "' for " + std::string(what));
  }
  return value;
}

}  // namespace csv
}  // namespace webpar
