// Copyright 2026 The sdvicl Authors.
// SPDX-License-Identifier: Apache-2.0

#include "sdvicl/pipeline/trace_report.hpp"

#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "sdvicl/core/archive.hpp"

namespace sdvicl {

std::string trace_json(const EpisodeTrace& trace, const std::map<std::string, std::string>& extra) {
  nlohmann::json j;
  nlohmann::json cfg = nlohmann::json::object();
  for (const auto& [k, v] : to_key_values(trace.config)) cfg[k] = v;
  j["config"] = cfg;
  j["seed"] = trace.config.seed;
  j["backend_id"] = trace.backend_id;
  j["input_hashes"] = trace.input_hashes;
  j["prompt_ids"] = trace.prompt_ids;
  nlohmann::json paths = nlohmann::json::object();
  for (const auto& [name, traj] : trace.trajectories) {
    paths[name] = {{"seed", traj.seed},
                   {"latent_hash", hex64(traj.source_hash)},
                   {"steps", traj.num_steps()}};
  }
  j["paths"] = paths;
  if (!trace.trajectories.empty()) j["timesteps"] = trace.trajectories.begin()->second.schedule.timestep_indices;
  j["prediction_hash"] = hex64(content_hash(trace.prediction));
  j["prediction_shape"] = {trace.prediction.height, trace.prediction.width};
  j["timings_s"] = {{"encode", trace.timings.encode_s},
                    {"invert", trace.timings.invert_s},
                    {"denoise", trace.timings.denoise_s},
                    {"decode", trace.timings.decode_s},
                    {"total", trace.timings.total_s}};
  for (const auto& [k, v] : extra) j[k] = v;
  return j.dump(2);
}

void write_text_atomic(const std::string& path, const std::string& text) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  std::error_code ec;
  if (target.has_parent_path()) fs::create_directories(target.parent_path(), ec);
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp);
    out << text;
    if (!out) throw Error(ErrorKind::kIo, "cannot write " + tmp.string());
  }
  fs::rename(tmp, target, ec);
  if (ec) throw Error(ErrorKind::kIo, "cannot rename onto " + path + ": " + ec.message());
}

}  // namespace sdvicl
