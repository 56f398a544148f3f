#include <doctest.h>

#include <set>

#include "fixtures.hpp"
#include "telezoom/evalkit.hpp"

using namespace telezoom;

TEST_CASE("the queue obeys its own dynamics") {
  TrafficConfig cfg;
  cfg.duration_ms = 3000;
  cfg.seed = 12;
  const auto tr = simulate(cfg);
  const auto& q = tr.channels.at("qlen").values;
  const auto& sent = tr.channels.at("sent").values;
  const auto& drop = tr.channels.at("drop").values;
  double prev = 0;
  for (std::size_t t = 0; t < q.size(); ++t) {
    const double a = tr.arrivals[t];
    CHECK(sent[t] == std::min(prev + a, static_cast<double>(cfg.service_rate)));
    CHECK(q[t] + sent[t] + drop[t] == prev + a);
    CHECK(q[t] <= cfg.capacity);
    if (q[t] > 0) CHECK(sent[t] == cfg.service_rate);  // work conserving
    prev = q[t];
  }
  CHECK_FALSE(tr.bursts.empty());
}

TEST_CASE("dataset generation is deterministic and split by trace") {
  const auto preset = fixtures::small_preset("bursty", 2, 1500);
  const auto a = build_dataset(preset, 50, 9);
  const auto b = build_dataset(preset, 50, 9);
  CHECK(windows_to_jsonl(a.train) == windows_to_jsonl(b.train));
  CHECK(windows_to_jsonl(a.test) == windows_to_jsonl(b.test));
  const auto c = build_dataset(preset, 50, 10);
  CHECK(windows_to_jsonl(a.train) != windows_to_jsonl(c.train));

  std::set<std::int64_t> train_traces, test_traces;
  for (const auto& w : a.train.windows) train_traces.insert(w.trace);
  for (const auto& w : a.test.windows) test_traces.insert(w.trace);
  for (auto t : train_traces) CHECK_FALSE(test_traces.count(t));
  CHECK(a.train.header.target_bound == 200);
  // Three traces per variant are enough for every split to be populated.
  const auto d = build_dataset(fixtures::small_preset("bursty", 3, 1500), 50, 9);
  CHECK_FALSE(d.val.windows.empty());
  CHECK(d.test.windows.size() > d.val.windows.size());
  CHECK(a.train.header.zoom == 50);
}

TEST_CASE("the default bursty preset is large enough for the experiments") {
  const auto preset = load_preset(find_preset_file("bursty"));
  const auto d = build_dataset(preset, 50, 1);
  CHECK(d.train.windows.size() + d.val.windows.size() + d.test.windows.size() >= 2000);
}

TEST_CASE("detected bursts track the generator's ON periods") {
  // The qlen burst detector should see about as many bursts per window as
  // the arrival process emitted (within one).
  const auto preset = fixtures::small_preset("bursty", 1, 4000);
  const auto d = build_dataset(preset, 50, 21, true);
  std::size_t checked = 0, close = 0;
  std::int64_t offset = 0;
  for (std::size_t t = 0; t < d.traces.size(); ++t) {
    const auto& tr = d.traces[t];
    const auto& q = tr.channels.at("qlen").values;
    const std::size_t span = 250;
    for (std::size_t s = 0; s + span <= q.size(); s += span) {
      std::size_t emitted = 0;
      for (const auto& b : tr.bursts) {
        if (b.start >= static_cast<std::int64_t>(s) && b.start < static_cast<std::int64_t>(s + span)) ++emitted;
      }
      const auto found = detect_bursts(std::span<const double>(q).subspan(s, span), 0.5).size();
      ++checked;
      if (std::abs(static_cast<double>(found) - static_cast<double>(emitted)) <= 1) ++close;
    }
    offset += static_cast<std::int64_t>(q.size());
  }
  CHECK(checked > 50);
  CHECK(static_cast<double>(close) >= 0.9 * static_cast<double>(checked));
}

TEST_CASE("presets are validated") {
  CHECK_THROWS_AS(preset_from_json("{\"name\": \"x\"}"), ConfigError);
  CHECK_THROWS_AS(find_preset_file("does-not-exist"), ConfigError);
  TrafficConfig bad;
  bad.burst_duration_min = 9;
  bad.burst_duration_max = 3;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}
