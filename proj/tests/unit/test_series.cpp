#include <doctest.h>

#include "fixtures.hpp"
#include "telezoom/series_io.hpp"

using namespace telezoom;

TEST_CASE("coarsening kinds") {
  const std::vector<double> x{1, 5, 0, 2, 2, 0, 0, 3};
  CHECK(coarsen(x, {CoarsenKind::max, 4}) == std::vector<double>{5, 3});
  CHECK(coarsen(x, {CoarsenKind::min, 4}) == std::vector<double>{0, 0});
  CHECK(coarsen(x, {CoarsenKind::sum, 4}) == std::vector<double>{8, 5});
  CHECK(coarsen(x, {CoarsenKind::mean, 4}) == std::vector<double>{2, 1.25});
  CHECK(coarsen(x, {CoarsenKind::periodic, 4}) == std::vector<double>{1, 2});
  CHECK(coarsen(x, {CoarsenKind::periodic, 4, 3}) == std::vector<double>{2, 3});
  CHECK(coarsen(x, {CoarsenKind::count_positive, 4}) == std::vector<double>{3, 2});
  CHECK_THROWS_AS(coarsen(x, {CoarsenKind::max, 3}), ShapeError);
  CHECK_THROWS_AS(coarsen(x, {CoarsenKind::periodic, 4, 4}), ConfigError);
  CHECK(upsample_repeat(std::vector<double>{1, 2}, 3) == std::vector<double>{1, 1, 1, 2, 2, 2});
  CHECK(default_entry_name("qlen", CoarsenKind::count_positive) == "qlen_nonzero");
}

TEST_CASE("series validation") {
  FineSeries s;
  s.channel = "q";
  s.domain = ValueDomain::nonneg_int;
  CHECK_THROWS_AS(s.validate(), DataError);
  s.values = {1, 2.5};
  CHECK_THROWS_AS(s.validate(), DataError);
  s.values = {1, -1};
  CHECK_THROWS_AS(s.validate(), DataError);
  s.values = {1, 2};
  CHECK_NOTHROW(s.validate());
}

TEST_CASE("windows are consistent with their source") {
  ChannelMap ch;
  for (const char* name : {"q", "s"}) {
    auto& f = ch[name];
    f.channel = name;
    for (int i = 0; i < 40; ++i) f.values.push_back((i * 7 + (name[0] == 'q' ? 3 : 1)) % 5);
  }
  const std::vector<EntrySpec> specs{make_entry("q", CoarsenKind::max, 4), make_entry("s", CoarsenKind::sum, 4)};
  WindowOptions opt;
  opt.context_len = 3;
  const auto ws = make_windows(ch, specs, "q", opt);
  CHECK(ws.size() == window_count(40, 12, 12));
  CHECK(ws.size() == 3);
  for (const auto& w : ws) {
    ChannelMap slice;
    for (const auto& [name, f] : ch) {
      auto& out = slice[name];
      out.channel = name;
      out.values.assign(f.values.begin() + w.start, f.values.begin() + w.start + 12);
    }
    CHECK(window_consistent(w, slice));
    slice["q"].values[0] += 10;
    CHECK_FALSE(window_consistent(w, slice));
  }
  opt.stride = 4;
  CHECK(make_windows(ch, specs, "q", opt).size() == window_count(40, 12, 4));
  CHECK_THROWS_AS(make_windows(ch, specs, "nope", opt), DataError);
}

TEST_CASE("window files round-trip exactly") {
  const auto splits = build_dataset(fixtures::small_preset("bursty", 1, 1000), 25, 1);
  const auto text = windows_to_jsonl(splits.train);
  const auto back = windows_from_jsonl(text);
  CHECK(windows_to_jsonl(back) == text);
  REQUIRE(back.windows.size() == splits.train.windows.size());
  CHECK(back.windows[3].target.values == splits.train.windows[3].target.values);
  CHECK(back.header.layout == splits.train.header.layout);
  CHECK_THROWS_AS(windows_from_jsonl(""), DataError);
}

TEST_CASE("CSV ingestion and export") {
  ChannelMap ch;
  ch["qlen"] = FineSeries{"qlen", {0, 1, 2, 3}, 1.0, ValueDomain::nonneg_int};
  ch["util"] = FineSeries{"util", {0.5, 0.25, 0, 1e-7}, 1.0, ValueDomain::nonneg_real};
  const auto text = export_csv_text(ch, 2);
  const auto schema = csv_schema_from_json(
      R"({"granularity_ms": 1, "channels": [{"name": "qlen", "domain": "nonneg_int"}, {"name": "util"}]})");
  const auto back = ingest_csv_text(text, schema);
  CHECK(back.at("qlen").values == ch["qlen"].values);
  CHECK(back.at("util").values == ch["util"].values);
  CHECK_THROWS_AS(ingest_csv_text("qlen\n1\n", csv_schema_from_json(R"({"granularity_ms": 1, "channels": [{"name": "x"}]})")),
                  DataError);
  CHECK(format_double(0.1) == "0.1");
}
