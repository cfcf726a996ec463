#include "dnc/text.hpp"

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>

#include "dnc/error.hpp"

namespace dnc {

std::string format_decimal9(double v) {
  if (std::isnan(v)) fail(Errc::InvalidArgument, "cannot format NaN");
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[512];
  std::snprintf(buf, sizeof(buf), "%.9f", v);
  std::string s(buf);
  auto dot = s.find('.');
  size_t last = s.find_last_not_of('0');
  if (last == dot) last--;  // "1.000000000" -> "1"
  s.erase(last + 1);
  if (s == "-0") s = "0";
  return s;
}

std::string format_shortest(double v) {
  if (std::isnan(v)) fail(Errc::InvalidArgument, "cannot format NaN");
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double quantize9(double v) {
  if (!std::isfinite(v)) return v;
  return std::round(v * 1e9) / 1e9;
}

double parse_double(std::string_view tok, const std::string& what) {
  if (tok.empty()) fail(Errc::ParseError, what + ": empty number");
  std::string tmp(tok);
  errno = 0;
  char* end = nullptr;
  double v = std::strtod(tmp.c_str(), &end);
  if (end != tmp.c_str() + tmp.size() || errno == ERANGE)
    fail(Errc::ParseError, what + ": bad number '" + tmp + "'");
  return v;
}

long long parse_int(std::string_view tok, const std::string& what) {
  if (tok.empty()) fail(Errc::ParseError, what + ": empty integer");
  std::string tmp(tok);
  errno = 0;
  char* end = nullptr;
  long long v = std::strtoll(tmp.c_str(), &end, 10);
  if (end != tmp.c_str() + tmp.size() || errno == ERANGE)
    fail(Errc::ParseError, what + ": bad integer '" + tmp + "'");
  return v;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  size_t start = 0;
  while (true) {
    size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

uint64_t fnv1a(std::string_view bytes) {
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace dnc
