#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace webpar {

// Flat `key = value` text. Blank lines and lines starting with '#' are
// ignored; later keys override earlier ones.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::string_view text);
  static KeyValueConfig read(const std::filesystem::path& path);

  bool contains(std::string_view key) const;
  std::optional<std::string> get(std::string_view key) const;
  void set(std::string key, std::string value);

  double get_double(std::string_view key, double fallback) const;
  long long get_int(std::string_view key, long long fallback) const;
  std::string get_string(std::string_view key, std::string fallback) const;
  // Comma-separated list, e.g. `thread_counts = 1,2,4`.
  std::vector<double> get_doubles(std::string_view key, std::vector<double> fallback) const;
  std::vector<unsigned> get_unsigneds(std::string_view key, std::vector<unsigned> fallback) const;

  const std::map<std::string, std::string, std::less<>>& entries() const { return entries_; }

 private:
  std::map<std::string, std::string, std::less<>> entries_;
};

std::vector<std::string> split_list(std::string_view text, char sep = ',');

}  // namespace webpar
