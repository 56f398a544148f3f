#include "telezoom/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>

#include "json.hpp"

namespace telezoom {

using nlohmann::json;

void TrafficConfig::validate() const {
  auto bad = [&](const std::string& why) { throw ConfigError("traffic config '" + name + "': " + why); };
  if (duration_ms <= 0) bad("duration_ms must be positive");
  if (service_rate < 1) bad("service_rate must be >= 1 packet/ms");
  if (capacity <= 0) bad("capacity must be positive");
  if (background_load < 0 || background_load > 1) bad("background_load must lie in [0, 1]");
  if (burst_rate > 0 && burst_rate <= service_rate) bad("burst_rate must exceed service_rate");
  if (burst_duration_min < 1 || burst_duration_max < burst_duration_min) bad("bad burst duration range");
  if (burst_gap_min < 0 || burst_gap_max < burst_gap_min) bad("bad burst gap range");
  if (!(packet_kb > 0)) bad("packet_kb must be positive");
}

Trace simulate(const TrafficConfig& cfg) {
  cfg.validate();
  const auto n = static_cast<std::size_t>(cfg.duration_ms);
  Rng rng(cfg.seed);
  std::vector<double> qlen(n), sent(n), drop(n), util(n), retx(n), cong(n), arrivals(n);
  Trace trace;

  // ON/OFF schedule; a zero burst rate disables bursts entirely.
  std::int64_t next_on = cfg.burst_rate > 0 ? rng.range(cfg.burst_gap_min, cfg.burst_gap_max) : cfg.duration_ms;
  std::int64_t on_until = -1;
  const double bg_mean = cfg.background_load * cfg.service_rate;
  std::int64_t q = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto t = static_cast<std::int64_t>(i);
    if (t == next_on) {
      const auto dur = rng.range(cfg.burst_duration_min, cfg.burst_duration_max);
      on_until = t + dur;
      trace.bursts.push_back(BurstInterval{t, std::min<std::int64_t>(dur, cfg.duration_ms - t)});
      next_on = on_until + rng.range(cfg.burst_gap_min, cfg.burst_gap_max);
      if (next_on <= t) next_on = t + 1;
    }
    std::int64_t a = bg_mean > 0 ? rng.poisson(bg_mean) : 0;
    if (t < on_until) a += rng.poisson(cfg.burst_rate);
    const std::int64_t avail = q + a;
    const std::int64_t s = std::min<std::int64_t>(avail, cfg.service_rate);
    const std::int64_t d = std::max<std::int64_t>(0, avail - s - cfg.capacity);
    q = avail - s - d;

    arrivals[i] = static_cast<double>(a);
    qlen[i] = static_cast<double>(q);
    sent[i] = static_cast<double>(s);
    drop[i] = static_cast<double>(d);
    util[i] = static_cast<double>(s) * cfg.packet_kb;
    retx[i] = static_cast<double>(std::min(d, s)) * cfg.packet_kb;
    cong[i] = q > 0 ? util[i] : 0.0;
  }

  auto put = [&](const std::string& name, std::vector<double> v) {
    trace.channels[name] = FineSeries{name, std::move(v), 1.0, channel_domain(name)};
  };
  put("qlen", std::move(qlen));
  put("sent", std::move(sent));
  put("drop", std::move(drop));
  put("util", std::move(util));
  put("retx", std::move(retx));
  put("congestion", std::move(cong));
  trace.arrivals = std::move(arrivals);
  return trace;
}

ValueDomain channel_domain(const std::string& channel) {
  if (channel == "qlen" || channel == "sent" || channel == "drop") return ValueDomain::nonneg_int;
  return ValueDomain::nonneg_real;
}

std::vector<EntrySpec> GeneratorPreset::layout(int zoom) const {
  std::vector<EntrySpec> out;
  for (const auto& r : entries) out.push_back(make_entry(r.channel, r.kind, zoom, r.offset));
  return out;
}

namespace {

void apply_traffic_fields(const json& j, TrafficConfig& c) {
  static const char* kKnown[] = {"name", "duration_ms", "service_rate", "capacity", "background_load",
                                 "burst_rate", "burst_duration_min", "burst_duration_max", "burst_gap_min",
                                 "burst_gap_max", "packet_kb", "seed"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(std::begin(kKnown), std::end(kKnown), it.key()) == std::end(kKnown)) {
      throw ConfigError("unknown traffic field '" + it.key() + "'");
    }
  }
  c.name = j.value("name", c.name);
  c.duration_ms = j.value("duration_ms", c.duration_ms);
  c.service_rate = j.value("service_rate", c.service_rate);
  c.capacity = j.value("capacity", c.capacity);
  c.background_load = j.value("background_load", c.background_load);
  c.burst_rate = j.value("burst_rate", c.burst_rate);
  c.burst_duration_min = j.value("burst_duration_min", c.burst_duration_min);
  c.burst_duration_max = j.value("burst_duration_max", c.burst_duration_max);
  c.burst_gap_min = j.value("burst_gap_min", c.burst_gap_min);
  c.burst_gap_max = j.value("burst_gap_max", c.burst_gap_max);
  c.packet_kb = j.value("packet_kb", c.packet_kb);
  c.seed = j.value("seed", c.seed);
}

std::optional<double> channel_bound(const std::string& channel, const std::vector<TrafficConfig>& cfgs) {
  double b = 0;
  for (const auto& c : cfgs) {
    if (channel == "qlen") b = std::max(b, static_cast<double>(c.capacity));
    else if (channel == "sent") b = std::max(b, static_cast<double>(c.service_rate));
    else if (channel == "util" || channel == "congestion" || channel == "retx") b = std::max(b, c.service_rate * c.packet_kb);
    else return std::nullopt;
  }
  return b;
}

// Side scalars for the transport-style constraints (C7..C9). They are stand-ins
// chosen so the ground truth satisfies every library constraint.
Scalars window_scalars(const WindowExample& w, const ChannelMap& ch, const TrafficConfig& cfg, Rng& rng) {
  const auto& sent = ch.at("sent").values;
  const auto span = w.target.values.size();
  const int zoom = w.input.zoom;
  double total = 0, peak = 0;
  for (std::size_t i = 0; i < span; i += static_cast<std::size_t>(zoom)) {
    double s = 0;
    for (int k = 0; k < zoom; ++k) s += sent[static_cast<std::size_t>(w.start) + i + static_cast<std::size_t>(k)];
    peak = std::max(peak, s);
    total += s;
  }
  Scalars sc;
  sc["bandwidth"] = cfg.service_rate * cfg.packet_kb;
  sc["mss"] = cfg.packet_kb;
  sc["rtt"] = 20;
  sc["elapsed_time"] = static_cast<double>(rng.range(1, 40));
  sc["snd_cwnd"] = peak + static_cast<double>(rng.range(0, 5));
  sc["rwnd_limited"] = total == 0 ? sc["elapsed_time"] : 0.0;
  return sc;
}

}  // namespace

GeneratorPreset preset_from_json(std::string_view text, const std::string& origin) {
  GeneratorPreset p;
  try {
    const auto j = json::parse(text);
    p.name = j.value("name", std::string("custom"));
    p.target = j.value("target", p.target);
    p.context_len = j.value("context_len", p.context_len);
    p.traces_per_variant = j.value("traces_per_variant", p.traces_per_variant);
    p.holdout_variants = j.value("holdout_variants", p.holdout_variants);
    for (const auto& e : j.at("entries")) {
      EntryRequest r;
      r.channel = e.at("channel").get<std::string>();
      r.kind = parse_coarsen_kind(e.at("kind").get<std::string>());
      r.offset = e.value("offset", 0);
      p.entries.push_back(r);
    }
    if (j.contains("constraints")) p.constraints = j.at("constraints").get<std::vector<std::string>>();
    TrafficConfig base;
    if (j.contains("base")) apply_traffic_fields(j.at("base"), base);
    if (j.contains("variants")) {
      for (const auto& v : j.at("variants")) {
        TrafficConfig c = base;
        apply_traffic_fields(v, c);
        p.variants.push_back(c);
      }
    } else {
      p.variants.push_back(base);
    }
  } catch (const json::exception& e) {
    throw ConfigError(origin + ": " + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  if (p.entries.empty()) throw ConfigError(origin + ": preset lists no coarse entries");
  for (const auto& v : p.variants) v.validate();
  return p;
}

GeneratorPreset load_preset(const std::string& path) { return preset_from_json(read_file(path), path); }

std::string find_preset_file(const std::string& name) {
  namespace fs = std::filesystem;
  std::vector<fs::path> dirs;
  if (const char* env = std::getenv("TELEZOOM_CONFIG_DIR")) dirs.emplace_back(env);
  dirs.emplace_back("configs");
  dirs.emplace_back(fs::path(TELEZOOM_SOURCE_DIR) / "configs");
  for (const auto& d : dirs) {
    const auto p = d / (name + ".json");
    if (fs::exists(p)) return p.string();
  }
  throw ConfigError("unknown preset '" + name + "' (no configs/" + name + ".json found)");
}

DatasetSplits build_dataset(const GeneratorPreset& preset, int zoom, std::uint64_t seed, bool keep_traces) {
  if (preset.variants.empty()) throw ConfigError("preset '" + preset.name + "' has no traffic configs");
  const int seen = static_cast<int>(preset.variants.size()) - preset.holdout_variants;
  if (seen < 1) throw ConfigError("preset '" + preset.name + "' holds out every variant");
  if (preset.traces_per_variant < 1) throw ConfigError("traces_per_variant must be positive");
  const auto layout = preset.layout(zoom);
  for (const auto& e : layout) e.spec.validate();

  struct Job {
    TrafficConfig cfg;
    std::string split;
  };
  // Per seen variant: the last tenth of the traces (at least one once there
  // are three) goes to test and the tenth before it to val.
  const int n = preset.traces_per_variant;
  const int held = n >= 3 ? std::max(1, (n + 5) / 10) : 0;
  std::vector<Job> jobs;
  for (std::size_t v = 0; v < preset.variants.size(); ++v) {
    for (int k = 0; k < n; ++k) {
      Job job{preset.variants[v], "train"};
      job.cfg.seed = derive_seed(seed, jobs.size());
      if (static_cast<int>(v) >= seen || k >= n - held) job.split = "test";
      else if (k >= n - 2 * held) job.split = "val";
      jobs.push_back(std::move(job));
    }
  }

  const std::size_t span = static_cast<std::size_t>(preset.context_len) * static_cast<std::size_t>(zoom);
  for (const auto& v : preset.variants) {
    if (static_cast<std::size_t>(v.duration_ms) % span != 0) {
      log_warn("trace length " + std::to_string(v.duration_ms) + " is not a multiple of " + std::to_string(span) +
               " fine steps; trailing remainder dropped");
    }
  }

  // Traces are independent and seeded by index, so the parallel loop is deterministic.
  std::vector<Trace> traces(jobs.size());
  std::vector<std::vector<WindowExample>> windows(jobs.size());
  const auto njobs = static_cast<std::ptrdiff_t>(jobs.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < njobs; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    traces[idx] = simulate(jobs[idx].cfg);
    WindowOptions opt;
    opt.context_len = preset.context_len;
    opt.trace = i;
    windows[idx] = make_windows(traces[idx].channels, layout, preset.target, opt);
    Rng rng(derive_seed(jobs[idx].cfg.seed, 0x5ca1a75ull));
    for (auto& w : windows[idx]) w.scalars = window_scalars(w, traces[idx].channels, jobs[idx].cfg, rng);
  }

  DatasetSplits out;
  DatasetHeader h;
  h.granularity_ms = 1.0;
  h.zoom = zoom;
  h.context_len = preset.context_len;
  h.target = preset.target;
  h.target_domain = channel_domain(preset.target);
  h.layout = layout;
  h.target_bound = channel_bound(preset.target, preset.variants);
  out.train.header = out.val.header = out.test.header = h;
  out.train.header.split = "train";
  out.val.header.split = "val";
  out.test.header.split = "test";

  std::int64_t next_id = 0;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    Dataset& ds = jobs[i].split == "train" ? out.train : jobs[i].split == "val" ? out.val : out.test;
    for (auto& w : windows[i]) {
      w.id = next_id++;
      ds.windows.push_back(std::move(w));
    }
    out.trace_split.push_back(jobs[i].split);
  }
  if (keep_traces) out.traces = std::move(traces);
  return out;
}

Bindings standard_bindings(const std::vector<EntrySpec>& layout, const std::string& target, int periodic_offset) {
  Bindings b;
  b.periodic_offset = periodic_offset;
  auto bind = [&](const std::string& role, const std::string& entry) {
    if (std::any_of(layout.begin(), layout.end(), [&](const EntrySpec& e) { return e.name == entry; })) {
      b.roles[role] = entry;
    }
  };
  bind("max", target + "_max");
  bind("periodic", target + "_periodic");
  bind("sum", target + "_sum");
  bind("sent", "sent_sum");
  bind("retransmit", "retx_sum");
  bind("congestion", "congestion_sum");
  for (const char* s : {"bandwidth", "mss", "snd_cwnd", "rtt", "elapsed_time", "rwnd_limited"}) b.roles[s] = s;
  for (const auto& e : layout) {
    if (e.channel == target && e.spec.kind == CoarsenKind::periodic) b.periodic_offset = e.spec.offset;
  }
  return b;
}

}  // namespace telezoom
