#include "jndlc/core/kv_config.hpp"

#include <charconv>
#include <sstream>

#include "jndlc/core/error.hpp"

namespace jndlc {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<KeyValue> parse_key_values(std::string_view text) {
  std::vector<KeyValue> out;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    out.push_back({trim(std::string_view(t).substr(0, eq)), trim(std::string_view(t).substr(eq + 1)), lineno});
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("key '" + key + "' expects a boolean, got '" + v + "'");
}

namespace {

template <class T>
T parse_number(const std::string& key, const std::string& v, const char* what) {
  T out{};
  const char* end = v.data() + v.size();
  const auto res = std::from_chars(v.data(), end, out);
  if (v.empty() || res.ec != std::errc() || res.ptr != end) {
    throw ConfigError("key '" + key + "' expects " + what + ", got '" + v + "'");
  }
  return out;
}

}  // namespace

double parse_double(const std::string& key, const std::string& v) { return parse_number<double>(key, v, "a number"); }

long long parse_int(const std::string& key, const std::string& v) {
  return parse_number<long long>(key, v, "an integer");
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  return parse_number<std::uint64_t>(key, v, "a non-negative integer");
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace jndlc
