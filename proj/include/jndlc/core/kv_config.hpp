#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace jndlc {

struct KeyValue {
  std::string key;
  std::string value;
  int line = 0;
};

/// Parses `key = value` lines; `#` starts a comment, blank lines are skipped.
/// Throws ConfigError on lines without '='.
std::vector<KeyValue> parse_key_values(std::string_view text);

std::string trim(std::string_view s);

// Value parsers throwing ConfigError that names the key.
bool parse_bool(const std::string& key, const std::string& v);
double parse_double(const std::string& key, const std::string& v);
long long parse_int(const std::string& key, const std::string& v);
std::uint64_t parse_u64(const std::string& key, const std::string& v);

/// Shortest decimal that round-trips.
std::string format_double(double v);

}  // namespace jndlc
