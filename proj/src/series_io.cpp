#include "telezoom/series_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "json.hpp"

namespace telezoom {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "telezoom.windows";
constexpr int kVersion = 1;

json layout_to_json(const std::vector<EntrySpec>& layout) {
  json arr = json::array();
  for (const auto& e : layout) {
    arr.push_back({{"name", e.name},
                   {"channel", e.channel},
                   {"kind", std::string(to_string(e.spec.kind))},
                   {"zoom", e.spec.zoom},
                   {"offset", e.spec.offset}});
  }
  return arr;
}

std::vector<EntrySpec> layout_from_json(const json& arr) {
  std::vector<EntrySpec> out;
  for (const auto& j : arr) {
    EntrySpec e;
    e.name = j.at("name").get<std::string>();
    e.channel = j.at("channel").get<std::string>();
    e.spec.kind = parse_coarsen_kind(j.at("kind").get<std::string>());
    e.spec.zoom = j.at("zoom").get<int>();
    e.spec.offset = j.value("offset", 0);
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  cells.push_back(cur);
  for (auto& c : cells) {
    const auto b = c.find_first_not_of(" \t");
    const auto e = c.find_last_not_of(" \t");
    c = b == std::string::npos ? std::string() : c.substr(b, e - b + 1);
  }
  return cells;
}

double parse_number(const std::string& cell, std::size_t row, const std::string& column) {
  double v = 0;
  const auto* first = cell.data();
  const auto* last = cell.data() + cell.size();
  const auto res = std::from_chars(first, last, v);
  if (cell.empty() || res.ec != std::errc() || res.ptr != last) {
    throw DataError("row " + std::to_string(row) + ", column '" + column + "': cannot parse '" + cell + "'");
  }
  return v;
}

// "# granularity_ms=1 zoom=50" -> key/value pairs.
std::map<std::string, std::string> parse_header_record(std::string_view line) {
  std::map<std::string, std::string> kv;
  std::istringstream ss{std::string(line.substr(1))};
  std::string tok;
  while (ss >> tok) {
    const auto eq = tok.find('=');
    if (eq != std::string::npos) kv[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  return kv;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string windows_to_jsonl(const Dataset& ds) {
  const auto& h = ds.header;
  json header = {{"record", "header"},
                 {"format", kFormat},
                 {"version", kVersion},
                 {"split", h.split},
                 {"content", h.content},
                 {"granularity_ms", h.granularity_ms},
                 {"zoom", h.zoom},
                 {"context_len", h.context_len},
                 {"target", h.target},
                 {"target_domain", std::string(to_string(h.target_domain))},
                 {"layout", layout_to_json(h.layout)},
                 {"count", ds.windows.size()}};
  if (h.target_bound) header["target_bound"] = *h.target_bound;
  std::string out = header.dump();
  out.push_back('\n');
  for (const auto& w : ds.windows) {
    json coarse = json::object();
    for (const auto& e : w.input.entries) coarse[e.entry.name] = e.values;
    json rec = {{"record", "window"},
                {"id", w.id},
                {"trace", w.trace},
                {"start", w.start},
                {"coarse", coarse},
                {"target", w.target.values}};
    if (!w.scalars.empty()) rec["scalars"] = w.scalars;
    out += rec.dump();
    out.push_back('\n');
  }
  return out;
}

Dataset windows_from_jsonl(std::string_view text, const std::string& origin) {
  Dataset ds;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError(origin + ":" + std::to_string(lineno) + ": malformed record: " + e.what());
    }
    const auto kind = j.value("record", std::string());
    if (!have_header) {
      if (kind != "header" || j.value("format", std::string()) != kFormat) {
        throw DataError(origin + ": missing '" + std::string(kFormat) + "' header record");
      }
      if (j.value("version", 0) != kVersion) {
        throw DataError(origin + ": unsupported window file version " + std::to_string(j.value("version", 0)));
      }
      auto& h = ds.header;
      h.split = j.value("split", std::string("all"));
      h.content = j.value("content", std::string("ground_truth"));
      h.granularity_ms = j.at("granularity_ms").get<double>();
      h.zoom = j.at("zoom").get<int>();
      h.context_len = j.at("context_len").get<int>();
      h.target = j.at("target").get<std::string>();
      h.target_domain = parse_domain(j.at("target_domain").get<std::string>());
      h.layout = layout_from_json(j.at("layout"));
      if (j.contains("target_bound")) h.target_bound = j.at("target_bound").get<double>();
      have_header = true;
      continue;
    }
    if (kind != "window") throw DataError(origin + ":" + std::to_string(lineno) + ": unexpected record '" + kind + "'");
    WindowExample w;
    try {
      w.id = j.at("id").get<std::int64_t>();
      w.trace = j.value("trace", std::int64_t{0});
      w.start = j.value("start", std::int64_t{0});
      w.input.context_len = ds.header.context_len;
      w.input.zoom = ds.header.zoom;
      const auto& coarse = j.at("coarse");
      for (const auto& e : ds.header.layout) {
        if (!coarse.contains(e.name)) {
          throw DataError(origin + ":" + std::to_string(lineno) + ": window lacks entry '" + e.name + "'");
        }
        w.input.entries.push_back(CoarseEntry{e, coarse.at(e.name).get<std::vector<double>>()});
      }
      w.target.channel = ds.header.target;
      w.target.granularity_ms = ds.header.granularity_ms;
      w.target.domain = ds.header.target_domain;
      w.target.values = j.at("target").get<std::vector<double>>();
      if (j.contains("scalars")) w.scalars = j.at("scalars").get<Scalars>();
    } catch (const json::exception& e) {
      throw DataError(origin + ":" + std::to_string(lineno) + ": " + e.what());
    }
    w.input.validate();
    const auto expect = static_cast<std::size_t>(ds.header.context_len * ds.header.zoom);
    if (w.target.values.size() != expect) {
      throw ShapeError(origin + ":" + std::to_string(lineno) + ": window " + std::to_string(w.id) + " has " +
                       std::to_string(w.target.values.size()) + " fine values, expected " + std::to_string(expect));
    }
    ds.windows.push_back(std::move(w));
  }
  if (!have_header) throw DataError(origin + ": empty window file");
  return ds;
}

void write_windows(const std::string& path, const Dataset& ds) { write_file_atomic(path, windows_to_jsonl(ds)); }

Dataset read_windows(const std::string& path) { return windows_from_jsonl(read_file(path), path); }

CsvSchema csv_schema_from_json(std::string_view text) {
  CsvSchema schema;
  try {
    const auto j = json::parse(text);
    schema.granularity_ms = j.at("granularity_ms").get<double>();
    for (const auto& c : j.at("channels")) {
      CsvChannel ch;
      ch.name = c.at("name").get<std::string>();
      ch.column = c.value("column", ch.name);
      ch.domain = parse_domain(c.value("domain", std::string("nonneg_real")));
      schema.channels.push_back(std::move(ch));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed CSV schema: ") + e.what());
  }
  if (schema.channels.empty()) throw ConfigError("CSV schema names no channels");
  return schema;
}

CsvSchema read_csv_schema(const std::string& path) { return csv_schema_from_json(read_file(path)); }

ChannelMap ingest_csv_text(std::string_view text, const CsvSchema& schema) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto kv = parse_header_record(line);
      if (const auto it = kv.find("granularity_ms"); it != kv.end()) {
        if (std::stod(it->second) != schema.granularity_ms) {
          throw DataError("CSV granularity " + it->second + " ms disagrees with schema");
        }
      }
      continue;
    }
    header = split_csv_line(line);
    break;
  }
  if (header.empty()) throw DataError("CSV has no column header");

  std::vector<std::size_t> cols;
  for (const auto& ch : schema.channels) {
    const auto it = std::find(header.begin(), header.end(), ch.column);
    if (it == header.end()) throw DataError("CSV is missing column '" + ch.column + "'");
    cols.push_back(static_cast<std::size_t>(it - header.begin()));
  }

  ChannelMap out;
  for (const auto& ch : schema.channels) {
    auto& s = out[ch.name];
    s.channel = ch.name;
    s.granularity_ms = schema.granularity_ms;
    s.domain = ch.domain;
  }
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    ++row;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw DataError("row " + std::to_string(row) + " (line " + std::to_string(lineno) + ") has " +
                      std::to_string(cells.size()) + " cells, expected " + std::to_string(header.size()));
    }
    for (std::size_t k = 0; k < schema.channels.size(); ++k) {
      const auto& ch = schema.channels[k];
      const double v = parse_number(cells[cols[k]], row, ch.column);
      if (!std::isfinite(v) || v < 0) {
        throw DataError("row " + std::to_string(row) + ", column '" + ch.column + "': negative or non-finite value " +
                        cells[cols[k]]);
      }
      if (ch.domain == ValueDomain::nonneg_int && v != std::floor(v)) {
        throw DataError("row " + std::to_string(row) + ", column '" + ch.column + "': non-integer value " +
                        cells[cols[k]] + " in integer channel");
      }
      out[ch.name].values.push_back(v);
    }
  }
  if (row == 0) throw DataError("CSV has no data rows");
  return out;
}

ChannelMap ingest_csv(const std::string& path, const CsvSchema& schema) {
  try {
    return ingest_csv_text(read_file(path), schema);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

std::string export_csv_text(const ChannelMap& channels, std::optional<int> zoom) {
  if (channels.empty()) throw DataError("nothing to export");
  const auto& first = channels.begin()->second;
  std::string out = "# granularity_ms=" + format_double(first.granularity_ms);
  if (zoom) out += " zoom=" + std::to_string(*zoom);
  out += "\n";
  bool lead = true;
  for (const auto& [name, s] : channels) {
    if (s.size() != first.size()) throw DataError("channel '" + name + "' length differs");
    out += (lead ? "" : ",") + name;
    lead = false;
  }
  out += "\n";
  for (std::size_t i = 0; i < first.size(); ++i) {
    lead = true;
    for (const auto& [name, s] : channels) {
      if (!lead) out.push_back(',');
      out += format_double(s.values[i]);
      lead = false;
    }
    out.push_back('\n');
  }
  return out;
}

void export_csv(const std::string& path, const ChannelMap& channels, std::optional<int> zoom) {
  write_file_atomic(path, export_csv_text(channels, zoom));
}

std::string bundles_to_csv(const Dataset& ds) {
  std::string out = "# granularity_ms=" + format_double(ds.header.granularity_ms) +
                    " zoom=" + std::to_string(ds.header.zoom) +
                    " context_len=" + std::to_string(ds.header.context_len) + "\n";
  out += "window_id,step";
  for (const auto& e : ds.header.layout) out += "," + e.name;
  out += "\n";
  for (const auto& w : ds.windows) {
    for (int t = 0; t < w.input.context_len; ++t) {
      out += std::to_string(w.id) + "," + std::to_string(t);
      for (const auto& e : w.input.entries) out += "," + format_double(e.values[static_cast<std::size_t>(t)]);
      out += "\n";
    }
  }
  return out;
}

}  // namespace telezoom
