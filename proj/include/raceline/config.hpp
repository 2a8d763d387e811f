#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace raceline {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

/// Whole-string numeric parsing; FormatError names `what` on failure.
double parse_double(const std::string& text, const std::string& what = "value");
int parse_int(const std::string& text, const std::string& what = "value");
std::uint64_t parse_u64(const std::string& text, const std::string& what = "value");

/// Splits one CSV line on commas (no quoting).
std::vector<std::string> split_csv_line(const std::string& line);

/// Comma-separated list of unsigned integers, e.g. "1,2,3".
std::vector<std::uint64_t> parse_u64_list(const std::string& text);
std::string format_u64_list(const std::vector<std::uint64_t>& values);

/// Flat `key=value` text. Blank lines and lines starting with '#' are
/// ignored; whitespace around keys and values is trimmed.
class KeyValues {
 public:
  static KeyValues parse(const std::string& text);
  static KeyValues load(const std::filesystem::path& path);

  void save(const std::filesystem::path& path) const;
  std::string to_string() const;

  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }
  bool contains(const std::string& key) const { return values_.contains(key); }
  std::optional<std::string> get(const std::string& key) const;

  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  std::vector<std::uint64_t> get_u64_list(const std::string& key, std::vector<std::uint64_t> fallback) const;

  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace raceline
