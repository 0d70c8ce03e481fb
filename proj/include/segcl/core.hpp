#pragma once

#include <array>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace segcl {

inline constexpr int kEventsFormatVersion = 1;
inline constexpr int kGraphFormatVersion = 1;
inline constexpr int kPatternFormatVersion = 1;
inline constexpr int kCheckpointFormatVersion = 1;
inline constexpr int kEmbeddingFormatVersion = 1;
inline constexpr int kManifestFormatVersion = 1;

/// Base error for all pipeline failures; messages name the offending
/// file/line/field so CLI output stays actionable.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(what) {}
};

class SchemaError : public Error {
 public:
  explicit SchemaError(const std::string& what) : Error(what) {}
};

class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& what) : Error(what) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(what) {}
};

/// FNV-1a, used for feature hashing and config fingerprints. Stable across
/// platforms, unlike std::hash.
inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

/// splitmix64 finalizer; mixes a base seed with a stream tag so independent
/// random streams (init, negatives, dropout, splits, ...) never collide.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
  return std::mt19937_64(mix_seed(seed, stream));
}

/// Stream further keyed by two indices, e.g. (epoch, graph), so per-item
/// randomness is independent of processing order.
inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream,
                                std::uint64_t a, std::uint64_t b = 0) {
  return std::mt19937_64(mix_seed(mix_seed(mix_seed(seed, stream), a + 1), b + 1));
}

// Stream tags for derived RNGs.
namespace rng_stream {
inline constexpr std::uint64_t kParamInit = 1;
inline constexpr std::uint64_t kFeatures = 2;
inline constexpr std::uint64_t kNegatives = 3;
inline constexpr std::uint64_t kDropout = 4;
inline constexpr std::uint64_t kBatchOrder = 5;
inline constexpr std::uint64_t kProbeSplit = 6;
inline constexpr std::uint64_t kSynth = 7;
}  // namespace rng_stream

inline std::string lowercase_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return out;
}

inline bool has_ascii_upper(std::string_view s) {
  for (char c : s)
    if (c >= 'A' && c <= 'Z') return true;
  return false;
}

inline std::vector<std::string> split_whitespace(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i) out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

/// Shortest round-trip decimal form, locale-independent.
inline std::string format_double(double value) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), res.ptr);
}

}  // namespace segcl
