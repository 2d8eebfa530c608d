#include "webpar/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "webpar/csv.hpp"
#include "webpar/error.hpp"

namespace webpar {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

std::vector<std::string> split_list(std::string_view text, char sep) {
  std::vector<std::string> out;
  text = trim(text);
  if (text.empty()) return out;
  std::size_t start = 0;
  while (true) {
    auto pos = text.find(sep, start);
    out.emplace_back(trim(text.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

KeyValueConfig KeyValueConfig::parse(std::string_view text) {
  KeyValueConfig config;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    auto eol = text.find('\n');
    auto line = trim(text.substr(0, eol));
    text = eol == std::string_view::npos ? std::string_view() : text.substr(eol + 1);
    if (line.empty() || line.front() == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorKind::configuration,
                  "config line " + std::to_string(line_no) + ": expected key = value");
    }
    auto key = trim(line.substr(0, eq));
    if (key.empty()) {
      throw Error(ErrorKind::configuration, "config line " + std::to_string(line_no) + ": empty key");
    }
    config.entries_[std::string(key)] = std::string(trim(line.substr(eq + 1)));
  }
  return config;
}

KeyValueConfig KeyValueConfig::read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open config " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

bool KeyValueConfig::contains(std::string_view key) const { return entries_.find(key) != entries_.end(); }

std::optional<std::string> KeyValueConfig::get(std::string_view key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void KeyValueConfig::set(std::string key, std::string value) { entries_[std::move(key)] = std::move(value); }

double KeyValueConfig::get_double(std::string_view key, double fallback) const {
  auto v = get(key);
  return v ? csv::parse_double(*v, key) : fallback;
}

long long KeyValueConfig::get_int(std::string_view key, long long fallback) const {
  auto v = get(key);
  return v ? csv::parse_int(*v, key) : fallback;
}

std::string KeyValueConfig::get_string(std::string_view key, std::string fallback) const {
  auto v = get(key);
  return v ? *v : std::move(fallback);
}

std::vector<double> KeyValueConfig::get_doubles(std::string_view key, std::vector<double> fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  std::vector<double> out;
  for (const auto& item : split_list(*v)) out.push_back(csv::parse_double(item, key));
  return out;
}

std::vector<unsigned> KeyValueConfig::get_unsigneds(std::string_view key,
                                                    std::vector<unsigned> fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  std::vector<unsigned> out;
  for (const auto& item : split_list(*v)) {
    auto n = csv::parse_int(item, key);
    if (n <= 0) throw Error(ErrorKind::configuration, std::string(key) + " entries must be positive");
    out.push_back(static_cast<unsigned>(n));
  }
  return out;
}

}  // namespace webpar
