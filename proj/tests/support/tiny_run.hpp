#pragma once

// A shrunk preset and run config for end-to-end tests.

#include <filesystem>
#include <string>

#include "json.hpp"
#include "telezoom/datagen.hpp"
#include "telezoom/pipeline.hpp"

namespace fixtures {

/// Writes a copy of a stock preset with fewer, shorter traces and returns its path.
inline std::string write_small_preset(const std::filesystem::path& dir, const std::string& name, int traces,
                                      int duration_ms, int keep_variants = 0) {
  auto j = nlohmann::json::parse(telezoom::read_file(telezoom::find_preset_file(name)));
  j["traces_per_variant"] = traces;
  j["base"]["duration_ms"] = duration_ms;
  if (keep_variants > 0 && static_cast<int>(j["variants"].size()) > keep_variants) {
    auto v = nlohmann::json::array();
    for (int i = 0; i < keep_variants - 1; ++i) v.push_back(j["variants"][static_cast<std::size_t>(i)]);
    v.push_back(j["variants"].back());  // keep the held-out variant
    j["variants"] = v;
  }
  std::filesystem::create_directories(dir);
  const auto path = (dir / (name + "_small.json")).string();
  telezoom::write_file_atomic(path, j.dump(2));
  return path;
}

inline telezoom::RunConfig tiny_config(const std::string& preset_path, int zoom = 10) {
  telezoom::RunConfig c;
  c.preset = preset_path;
  c.zoom = zoom;
  c.model.layers = 1;
  c.model.width = 8;
  c.model.heads = 2;
  c.model.ff_width = 16;
  c.train.max_epochs = 2;
  c.train.patience = 2;
  c.train.batch_size = 16;
  c.kal.max_outer = 2;
  return c;
}

inline std::string temp_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("telezoom_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p.string();
}

}  // namespace fixtures
