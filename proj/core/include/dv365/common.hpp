#pragma once
// Shared plumbing: error taxonomy, id hashing, seed derivation, number formatting.

#include <charconv>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace dv365 {

// Bad input from the operator (CLI maps this to exit code 1).
struct UserError : std::runtime_error {
  explicit UserError(const std::string& msg) : std::runtime_error(msg) {}
};

// Broken internal invariant (CLI maps this to exit code 2).
struct InternalError : std::logic_error {
  explicit InternalError(const std::string& msg) : std::logic_error(msg) {}
};

#define DV365_CHECK(cond, msg)                        \
  do {                                                \
    if (!(cond)) throw ::dv365::InternalError(msg);   \
  } while (0)

#define DV365_REQUIRE(cond, msg)                      \
  do {                                                \
    if (!(cond)) throw ::dv365::UserError(msg);       \
  } while (0)

// splitmix64 finalizer. Fixed mixer for the hash trick and for deriving
// named sub-seeds; never keyed on runtime state.
inline uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t hash_str(std::string_view s, uint64_t seed = 0) {
  uint64_t h = 1469598103934665603ULL ^ mix64(seed);
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return mix64(h);
}

// All stage randomness flows from one master seed through named channels,
// so adding a parameter block never shifts another block's draws.
inline uint64_t derive_seed(uint64_t master, std::string_view channel) {
  return hash_str(channel, mix64(master));
}

// Hash-trick row assignment for an id within a table of `rows` slots.
inline uint32_t hash_to_row(uint64_t id, uint64_t salt, uint32_t rows) {
  return static_cast<uint32_t>(mix64(id ^ salt) % rows);
}

// Shortest round-trip decimal formatting (event logs must reparse exactly).
inline std::string fmt_double(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
  double v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw UserError("bad float: " + std::string(s));
  return v;
}

inline int64_t parse_i64(std::string_view s) {
  int64_t v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw UserError("bad integer: " + std::string(s));
  return v;
}

inline uint64_t parse_u64(std::string_view s) {
  uint64_t v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw UserError("bad unsigned integer: " + std::string(s));
  return v;
}

constexpr int64_t kSecondsPerHour = 3600;
constexpr int64_t kSecondsPerDay = 86400;

}  // namespace dv365
