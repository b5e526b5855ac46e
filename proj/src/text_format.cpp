#include "afs/text_format.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "afs/errors.hpp"

namespace afs::text {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& s, bool require_finite) {
  if (s.empty()) throw InvalidArgument("empty numeric field");
  const char* begin = s.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end != begin + s.size()) {
    throw InvalidArgument("malformed numeric field: '" + s + "'");
  }
  if (require_finite && !std::isfinite(v)) {
    throw InvalidArgument("non-finite numeric field: '" + s + "'");
  }
  return v;
}

std::size_t parse_size(const std::string& s) {
  if (s.empty()) throw InvalidArgument("empty integer field");
  for (char c : s) {
    if (c < '0' || c > '9') {
      throw InvalidArgument("malformed integer field: '" + s + "'");
    }
  }
  const char* begin = s.c_str();
  char* end = nullptr;
  const unsigned long long v = std::strtoull(begin, &end, 10);
  if (end != begin + s.size()) {
    throw InvalidArgument("malformed integer field: '" + s + "'");
  }
  return static_cast<std::size_t>(v);
}

std::vector<std::string> split(const std::string& s, char delim) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(delim, start);
    if (pos == std::string::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string expect_kv(const std::string& token, const std::string& key) {
  const std::size_t pos = token.find('=');
  if (pos == std::string::npos || token.substr(0, pos) != key) {
    throw InvalidArgument("expected '" + key + "=<value>', got '" + token +
                          "'");
  }
  return token.substr(pos + 1);
}

std::vector<double> parse_double_list(const std::string& s,
                                      bool require_finite) {
  std::vector<double> out;
  for (const std::string& field : split(s, ',')) {
    out.push_back(parse_double(field, require_finite));
  }
  return out;
}

std::string join17(const std::vector<double>& v, char delim) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out.push_back(delim);
    out += fmt17(v[i]);
  }
  return out;
}

}  // namespace afs::text
