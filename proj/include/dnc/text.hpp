#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace dnc {

// Canonical decimal form used by all text formats: at most 9 fractional
// digits, trailing zeros stripped, "inf"/"-inf" for infinities. Values
// produced by quantize9() round-trip bit-exactly through this form.
std::string format_decimal9(double v);

// Shortest decimal string that parses back to exactly v. Used where a
// serialized value is a derived sum rather than a canonical 9-digit decimal.
std::string format_shortest(double v);

// Nearest double to round(v * 1e9) / 1e9.
double quantize9(double v);

// Strict full-token parses; throw ParseError (with `what` as context) on
// malformed input.
double parse_double(std::string_view tok, const std::string& what);
long long parse_int(std::string_view tok, const std::string& what);

std::vector<std::string_view> split(std::string_view line, char sep);

// FNV-1a over bytes; stable across platforms, used for spec hashes.
uint64_t fnv1a(std::string_view bytes);

// splitmix64 generator: tiny, seedable, identical on every platform.
struct Rng {
  uint64_t state;

  explicit Rng(uint64_t seed) : state(seed) {}

  uint64_t next_u64() {
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // In [0, 1).
  double next_double() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // In [lo, hi] inclusive.
  int64_t uniform_int(int64_t lo, int64_t hi) {
    return lo + int64_t(next_u64() % uint64_t(hi - lo + 1));
  }
};

}  // namespace dnc
