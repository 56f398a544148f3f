#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "telezoom/constraints.hpp"
#include "telezoom/series_io.hpp"

namespace telezoom {

/// Single-queue traffic model: Poisson background load plus ON/OFF bursts.
struct TrafficConfig {
  std::string name = "default";
  std::int64_t duration_ms = 10000;
  int service_rate = 10;          // packets per ms
  int capacity = 200;             // buffer B in packets
  double background_load = 0.3;   // fraction of service_rate
  double burst_rate = 40;         // arrival rate (packets/ms) while a burst is ON
  int burst_duration_min = 5;
  int burst_duration_max = 20;
  int burst_gap_min = 100;
  int burst_gap_max = 400;
  double packet_kb = 1.5;         // converts packets to KB for the link channels
  std::uint64_t seed = 1;

  void validate() const;
};

struct BurstInterval {
  std::int64_t start = 0;
  std::int64_t duration = 0;
};

/// Fine channels qlen, sent, drop (integer) and util, retx, congestion (real).
/// qlen records the backlog left after each millisecond.
struct Trace {
  ChannelMap channels;
  std::vector<double> arrivals;
  std::vector<BurstInterval> bursts;  // ON periods of the arrival process
};

Trace simulate(const TrafficConfig& cfg);

/// Entry requested by a preset; the zoom is filled in at build time.
struct EntryRequest {
  std::string channel;
  CoarsenKind kind = CoarsenKind::max;
  int offset = 0;
};

/// A named family of traffic configs plus how to coarsen and split them.
struct GeneratorPreset {
  std::string name;
  std::string target = "qlen";
  std::vector<EntryRequest> entries;
  std::vector<std::string> constraints;  // library ids, e.g. C1..C3
  int context_len = 5;
  int traces_per_variant = 10;
  int holdout_variants = 1;             // trailing variants appear only in the test split
  std::vector<TrafficConfig> variants;  // fully resolved (base + overrides)

  std::vector<EntrySpec> layout(int zoom) const;
};

GeneratorPreset preset_from_json(std::string_view text, const std::string& origin = "<memory>");
GeneratorPreset load_preset(const std::string& path);
/// Looks up configs/<name>.json in $TELEZOOM_CONFIG_DIR, ./configs, then the source tree.
std::string find_preset_file(const std::string& name);

struct DatasetSplits {
  Dataset train, val, test;
  std::vector<Trace> traces;  // kept only when requested
  std::vector<std::string> trace_split;
};

/// Simulates every trace, windows it, and splits by trace.
DatasetSplits build_dataset(const GeneratorPreset& preset, int zoom, std::uint64_t seed, bool keep_traces = false);

/// Role bindings for the library constraints against a standard layout.
Bindings standard_bindings(const std::vector<EntrySpec>& layout, const std::string& target, int periodic_offset = 0);

/// Value domain for the generator's channels.
ValueDomain channel_domain(const std::string& channel);

}  // namespace telezoom
