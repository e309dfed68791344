#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace xlink {

/// Base exception for every recoverable failure in the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unordered pair of user ids stored with the lexicographically smaller uid first.
struct UidPair {
  std::string a;
  std::string b;

  UidPair() = default;
  UidPair(std::string x, std::string y);

  friend bool operator==(const UidPair&, const UidPair&) = default;
  friend auto operator<=>(const UidPair&, const UidPair&) = default;
};

struct UidPairHash {
  std::size_t operator()(const UidPair& p) const noexcept;
};

/// Packs two dense user indices into one key, smaller index first.
inline std::uint64_t pair_key(std::uint32_t i, std::uint32_t j) {
  if (i > j) std::swap(i, j);
  return (static_cast<std::uint64_t>(i) << 32) | j;
}
inline std::uint32_t pair_key_first(std::uint64_t k) { return static_cast<std::uint32_t>(k >> 32); }
inline std::uint32_t pair_key_second(std::uint64_t k) { return static_cast<std::uint32_t>(k & 0xffffffffu); }

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);
double parse_double(std::string_view s, std::string_view what);
std::int64_t parse_int(std::string_view s, std::string_view what);

std::vector<std::string_view> split(std::string_view s, char sep);

/// 64-bit FNV-1a, used for corpus checksums (stable across platforms).
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t file_checksum(const std::filesystem::path& path, std::uint64_t seed = 0xcbf29ce484222325ULL);

std::string read_file(const std::filesystem::path& path);
/// Writes atomically enough for our purposes: temp file then rename.
void write_file(const std::filesystem::path& path, std::string_view contents);

/// Runs fn(i) for i in [0, n) on `threads` workers with static contiguous chunks.
/// Callers write results into preallocated slots so output never depends on scheduling.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

/// Like parallel_for, but hands each worker a [begin, end) range plus its worker index.
void parallel_chunks(std::size_t n, int threads,
                     const std::function<void(std::size_t, std::size_t, int)>& fn);

}  // namespace xlink
