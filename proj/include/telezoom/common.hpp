#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>

namespace telezoom {

// Error hierarchy. The CLI maps these onto exit codes:
//   ConfigError -> 1, DataError/ShapeError -> 2, SolverError/TrainingError -> 3.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : Error {
  using Error::Error;
};
struct DataError : Error {
  using Error::Error;
};
struct ShapeError : DataError {
  using DataError::DataError;
};
struct SolverError : Error {
  using Error::Error;
};
struct TrainingError : Error {
  using Error::Error;
};

// Side measurements attached to a window (bandwidth, RTT, MSS, ...).
using Scalars = std::map<std::string, double>;

enum class LogLevel { debug = 0, info = 1, warn = 2, error = 3, quiet = 4 };

void set_log_level(LogLevel level);
LogLevel log_level();
void log(LogLevel level, std::string_view msg);
inline void log_info(std::string_view msg) { log(LogLevel::info, msg); }
inline void log_warn(std::string_view msg) { log(LogLevel::warn, msg); }

// 64-bit FNV-1a; stable across platforms, used for manifest hashes.
class Fnv1a {
 public:
  void update(std::string_view bytes);
  void update(const void* data, std::size_t n);
  template <typename T>
  void update_pod(const T& v) {
    update(&v, sizeof(T));
  }
  std::uint64_t digest() const { return state_; }
  std::string hex() const;

 private:
  std::uint64_t state_ = 14695981039346656037ull;
};

std::string hash_file(const std::string& path);
std::string hash_string(std::string_view s);

// splitmix64 step; used to derive independent stream seeds.
std::uint64_t splitmix64(std::uint64_t& state);
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

// Small deterministic generator (xoshiro256**). The standard library's
// distributions differ between implementations, so sampling helpers are ours.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);
  std::uint64_t next();
  double uniform();                              // [0, 1)
  std::uint64_t below(std::uint64_t n);          // [0, n)
  std::int64_t range(std::int64_t lo, std::int64_t hi);  // [lo, hi]
  double normal();
  std::int64_t poisson(double mean);

 private:
  std::uint64_t s_[4];
};

// Writes to a temp file next to `path` and renames it into place.
void write_file_atomic(const std::string& path, std::string_view contents);
std::string read_file(const std::string& path);

}  // namespace telezoom
