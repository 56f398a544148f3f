#include "telezoom/series.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace telezoom {

std::string_view to_string(ValueDomain d) {
  return d == ValueDomain::nonneg_int ? "nonneg_int" : "nonneg_real";
}

ValueDomain parse_domain(std::string_view s) {
  if (s == "nonneg_int" || s == "int") return ValueDomain::nonneg_int;
  if (s == "nonneg_real" || s == "real") return ValueDomain::nonneg_real;
  throw ConfigError("unknown value domain '" + std::string(s) + "'");
}

void FineSeries::validate() const {
  if (values.empty()) throw DataError("series '" + channel + "' is empty");
  if (!(granularity_ms > 0)) throw DataError("series '" + channel + "' has non-positive granularity");
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = values[i];
    if (!std::isfinite(v) || v < 0) {
      throw DataError("series '" + channel + "' has invalid value " + std::to_string(v) + " at index " +
                      std::to_string(i));
    }
    if (domain == ValueDomain::nonneg_int && v != std::floor(v)) {
      throw DataError("series '" + channel + "' is integer-valued but index " + std::to_string(i) +
                      " holds " + std::to_string(v));
    }
  }
}

std::string_view to_string(CoarsenKind k) {
  switch (k) {
    case CoarsenKind::max: return "max";
    case CoarsenKind::min: return "min";
    case CoarsenKind::mean: return "mean";
    case CoarsenKind::sum: return "sum";
    case CoarsenKind::periodic: return "periodic";
    case CoarsenKind::count_positive: return "count_positive";
  }
  return "?";
}

CoarsenKind parse_coarsen_kind(std::string_view s) {
  for (auto k : {CoarsenKind::max, CoarsenKind::min, CoarsenKind::mean, CoarsenKind::sum,
                 CoarsenKind::periodic, CoarsenKind::count_positive}) {
    if (to_string(k) == s) return k;
  }
  throw ConfigError("unknown coarsening kind '" + std::string(s) + "'");
}

void CoarsenerSpec::validate() const {
  if (zoom < 2) throw ConfigError("zoom-in factor must be >= 2, got " + std::to_string(zoom));
  if (kind == CoarsenKind::periodic && (offset < 0 || offset >= zoom)) {
    throw ConfigError("periodic offset " + std::to_string(offset) + " outside [0, " + std::to_string(zoom) +
                      ")");
  }
}

std::vector<double> coarsen(std::span<const double> values, const CoarsenerSpec& spec) {
  spec.validate();
  const auto z = static_cast<std::size_t>(spec.zoom);
  if (values.size() % z != 0) {
    throw ShapeError("series length " + std::to_string(values.size()) + " is not a multiple of Z=" +
                     std::to_string(z));
  }
  std::vector<double> out(values.size() / z);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto seg = values.subspan(i * z, z);
    switch (spec.kind) {
      case CoarsenKind::max: out[i] = *std::max_element(seg.begin(), seg.end()); break;
      case CoarsenKind::min: out[i] = *std::min_element(seg.begin(), seg.end()); break;
      case CoarsenKind::sum: out[i] = std::accumulate(seg.begin(), seg.end(), 0.0); break;
      case CoarsenKind::mean: out[i] = std::accumulate(seg.begin(), seg.end(), 0.0) / static_cast<double>(z); break;
      case CoarsenKind::periodic: out[i] = seg[static_cast<std::size_t>(spec.offset)]; break;
      case CoarsenKind::count_positive:
        out[i] = static_cast<double>(std::count_if(seg.begin(), seg.end(), [](double v) { return v > 0; }));
        break;
    }
  }
  return out;
}

std::vector<double> coarsen(const FineSeries& series, const CoarsenerSpec& spec) {
  return coarsen(std::span<const double>(series.values), spec);
}

std::vector<double> upsample_repeat(std::span<const double> coarse, int zoom) {
  std::vector<double> out;
  out.reserve(coarse.size() * static_cast<std::size_t>(zoom));
  for (double v : coarse) out.insert(out.end(), static_cast<std::size_t>(zoom), v);
  return out;
}

std::string default_entry_name(std::string_view channel, CoarsenKind kind) {
  std::string suffix;
  switch (kind) {
    case CoarsenKind::count_positive: suffix = "nonzero"; break;
    default: suffix = std::string(to_string(kind));
  }
  return std::string(channel) + "_" + suffix;
}

EntrySpec make_entry(std::string channel, CoarsenKind kind, int zoom, int offset) {
  EntrySpec e;
  e.name = default_entry_name(channel, kind);
  e.channel = std::move(channel);
  e.spec = CoarsenerSpec{kind, zoom, offset};
  return e;
}

const CoarseEntry* CoarseBundle::find(std::string_view name) const {
  for (const auto& e : entries) {
    if (e.entry.name == name) return &e;
  }
  return nullptr;
}

const CoarseEntry& CoarseBundle::at(std::string_view name) const {
  if (const auto* e = find(name)) return *e;
  throw DataError("coarse bundle has no entry named '" + std::string(name) + "'");
}

std::vector<EntrySpec> CoarseBundle::layout() const {
  std::vector<EntrySpec> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.entry);
  return out;
}

void CoarseBundle::validate() const {
  if (context_len <= 0) throw ShapeError("coarse bundle has no context intervals");
  for (const auto& e : entries) {
    if (e.values.size() != static_cast<std::size_t>(context_len)) {
      throw ShapeError("entry '" + e.entry.name + "' has " + std::to_string(e.values.size()) +
                       " values, expected " + std::to_string(context_len));
    }
    if (e.entry.spec.zoom != zoom) {
      throw ShapeError("entry '" + e.entry.name + "' uses Z=" + std::to_string(e.entry.spec.zoom) +
                       " but bundle uses Z=" + std::to_string(zoom));
    }
  }
}

std::size_t window_count(std::size_t length, std::size_t span, std::size_t stride) {
  if (length < span || stride == 0) return 0;
  return (length - span) / stride + 1;
}

std::vector<WindowExample> make_windows(const ChannelMap& channels, const std::vector<EntrySpec>& specs,
                                        const std::string& target_channel, const WindowOptions& options) {
  if (channels.empty()) throw DataError("no channels to window");
  const auto target_it = channels.find(target_channel);
  if (target_it == channels.end()) throw DataError("target channel '" + target_channel + "' not found");
  const std::size_t length = target_it->second.size();
  const double granularity = target_it->second.granularity_ms;
  for (const auto& [name, s] : channels) {
    if (s.size() != length) {
      throw DataError("channel '" + name + "' has length " + std::to_string(s.size()) + ", expected " +
                      std::to_string(length));
    }
    if (s.granularity_ms != granularity) throw DataError("channel '" + name + "' has a different granularity");
  }
  if (specs.empty()) throw ConfigError("no coarse entries requested");
  const int zoom = specs.front().spec.zoom;
  for (const auto& e : specs) {
    e.spec.validate();
    if (e.spec.zoom != zoom) throw ConfigError("all entries must share one zoom-in factor");
    if (!channels.contains(e.channel)) throw DataError("entry '" + e.name + "' watches unknown channel '" + e.channel + "'");
  }
  if (options.context_len <= 0) throw ConfigError("context length must be positive");

  const std::size_t span = static_cast<std::size_t>(options.context_len) * static_cast<std::size_t>(zoom);
  const std::size_t stride = options.stride > 0 ? static_cast<std::size_t>(options.stride) : span;
  const std::size_t count = window_count(length, span, stride);

  std::vector<WindowExample> out;
  out.reserve(count);
  for (std::size_t w = 0; w < count; ++w) {
    const std::size_t begin = w * stride;
    WindowExample ex;
    ex.id = options.first_id + static_cast<std::int64_t>(w);
    ex.trace = options.trace;
    ex.start = static_cast<std::int64_t>(begin);
    ex.input.context_len = options.context_len;
    ex.input.zoom = zoom;
    for (const auto& e : specs) {
      const auto& src = channels.at(e.channel).values;
      std::span<const double> seg(src.data() + begin, span);
      ex.input.entries.push_back(CoarseEntry{e, coarsen(seg, e.spec)});
    }
    const auto& tgt = target_it->second;
    ex.target.channel = tgt.channel.empty() ? target_channel : tgt.channel;
    ex.target.granularity_ms = tgt.granularity_ms;
    ex.target.domain = tgt.domain;
    ex.target.values.assign(tgt.values.begin() + static_cast<std::ptrdiff_t>(begin),
                            tgt.values.begin() + static_cast<std::ptrdiff_t>(begin + span));
    out.push_back(std::move(ex));
  }
  return out;
}

bool window_consistent(const WindowExample& w, const ChannelMap& source_window) {
  for (const auto& e : w.input.entries) {
    const auto it = source_window.find(e.entry.channel);
    if (it == source_window.end()) return false;
    if (coarsen(it->second, e.entry.spec) != e.values) return false;
  }
  return true;
}

}  // namespace telezoom
