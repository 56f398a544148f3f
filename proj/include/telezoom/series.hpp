#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "telezoom/common.hpp"

namespace telezoom {

enum class ValueDomain { nonneg_real, nonneg_int };

std::string_view to_string(ValueDomain d);
ValueDomain parse_domain(std::string_view s);

/// One fine-grained channel: ground truth, or an imputed version of it.
struct FineSeries {
  std::string channel;
  std::vector<double> values;
  double granularity_ms = 1.0;
  ValueDomain domain = ValueDomain::nonneg_real;

  std::size_t size() const { return values.size(); }
  /// Throws DataError on empty, negative, or non-integral (int domain) values.
  void validate() const;
};

enum class CoarsenKind { max, min, mean, sum, periodic, count_positive };

std::string_view to_string(CoarsenKind k);
CoarsenKind parse_coarsen_kind(std::string_view s);

/// The monitoring operator: Z fine steps collapse into one coarse value.
struct CoarsenerSpec {
  CoarsenKind kind = CoarsenKind::max;
  int zoom = 50;
  int offset = 0;  // periodic only: sampled position inside the interval

  void validate() const;
  bool operator==(const CoarsenerSpec&) const = default;
};

/// Applies `spec` to every length-Z interval of `values`.
/// Throws ShapeError when the length is not a multiple of Z.
std::vector<double> coarsen(std::span<const double> values, const CoarsenerSpec& spec);
std::vector<double> coarsen(const FineSeries& series, const CoarsenerSpec& spec);

/// Repeats every coarse value Z times.
std::vector<double> upsample_repeat(std::span<const double> coarse, int zoom);

/// A named coarse measurement: which channel it watches and how.
struct EntrySpec {
  std::string name;
  std::string channel;
  CoarsenerSpec spec;

  bool operator==(const EntrySpec&) const = default;
};

/// "qlen" + max -> "qlen_max".
std::string default_entry_name(std::string_view channel, CoarsenKind kind);
EntrySpec make_entry(std::string channel, CoarsenKind kind, int zoom, int offset = 0);

struct CoarseEntry {
  EntrySpec entry;
  std::vector<double> values;
};

/// Aligned coarse measurements for one context window (the model input).
struct CoarseBundle {
  std::vector<CoarseEntry> entries;
  int context_len = 0;
  int zoom = 0;

  const CoarseEntry* find(std::string_view name) const;
  const CoarseEntry& at(std::string_view name) const;  // throws DataError
  std::vector<EntrySpec> layout() const;
  void validate() const;
};

/// One training pair: coarse input, fine target, and side scalars.
struct WindowExample {
  std::int64_t id = 0;
  std::int64_t trace = 0;
  std::int64_t start = 0;  // first fine index inside the source trace
  CoarseBundle input;
  FineSeries target;
  Scalars scalars;
};

using ChannelMap = std::map<std::string, FineSeries>;

struct WindowOptions {
  int context_len = 5;
  int stride = 0;  // 0 means non-overlapping (context_len * zoom)
  std::int64_t first_id = 0;
  std::int64_t trace = 0;
};

/// Slides windows of context_len*Z fine steps across aligned channels.
std::vector<WindowExample> make_windows(const ChannelMap& channels,
                                        const std::vector<EntrySpec>& specs,
                                        const std::string& target_channel,
                                        const WindowOptions& options);

/// Re-coarsens a fine window against each entry; true when all match exactly.
bool window_consistent(const WindowExample& w, const ChannelMap& source_window);

/// Number of windows make_windows will emit for a trace of `length` steps.
std::size_t window_count(std::size_t length, std::size_t span, std::size_t stride);

}  // namespace telezoom
