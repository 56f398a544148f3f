#pragma once

#include <optional>
#include <string>
#include <vector>

#include "telezoom/series.hpp"

namespace telezoom {

/// Header record shared by every window file.
struct DatasetHeader {
  std::string split = "all";
  double granularity_ms = 1.0;
  int zoom = 50;
  int context_len = 5;
  std::string target;
  ValueDomain target_domain = ValueDomain::nonneg_real;
  std::vector<EntrySpec> layout;
  std::optional<double> target_bound;  // e.g. buffer capacity; feeds the CEM big-M
  std::string content = "ground_truth";  // or "imputed"
};

struct Dataset {
  DatasetHeader header;
  std::vector<WindowExample> windows;
};

/// Line-delimited JSON: one header record, then one record per window.
std::string windows_to_jsonl(const Dataset& ds);
Dataset windows_from_jsonl(std::string_view text, const std::string& origin = "<memory>");
void write_windows(const std::string& path, const Dataset& ds);
Dataset read_windows(const std::string& path);

struct CsvChannel {
  std::string name;
  std::string column;
  ValueDomain domain = ValueDomain::nonneg_real;
};

/// Maps CSV columns onto channels (the ingestion schema file).
struct CsvSchema {
  double granularity_ms = 1.0;
  std::vector<CsvChannel> channels;
};

CsvSchema read_csv_schema(const std::string& path);
CsvSchema csv_schema_from_json(std::string_view text);

/// Wide CSV, one column per channel, preceded by a '#' header record.
ChannelMap ingest_csv_text(std::string_view text, const CsvSchema& schema);
ChannelMap ingest_csv(const std::string& path, const CsvSchema& schema);
std::string export_csv_text(const ChannelMap& channels, std::optional<int> zoom = std::nullopt);
void export_csv(const std::string& path, const ChannelMap& channels, std::optional<int> zoom = std::nullopt);

/// Coarse bundles as wide CSV: window_id, step, then one column per entry.
std::string bundles_to_csv(const Dataset& ds);

/// Formats a double so that parsing it back yields the identical value.
std::string format_double(double v);

}  // namespace telezoom
