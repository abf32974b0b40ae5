// Copyright 2026 The sdvicl Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sdvicl/benchmark/datasets.hpp"
#include "sdvicl/benchmark/metrics.hpp"
#include "sdvicl/pipeline/pipeline.hpp"

namespace sdvicl {

struct EpisodeScore {
  std::string query_id;
  std::vector<std::string> prompt_ids;
  std::map<std::string, double> scores;  // empty when failed or undefined
  std::string status = "ok";            // ok | failed | undefined
  std::string error_kind;
  std::string error;
  double seconds = 0;
  std::string prediction_path;  // relative to the report directory
};

struct MetricReport {
  std::string dataset;
  std::string split;
  TaskKind task = TaskKind::kForegroundSegmentation;
  VICLConfig config;
  std::string backend_id;
  std::string pool;
  std::vector<std::string> notes;  // assumptions stated in the report
  std::vector<EpisodeScore> episodes;
  std::map<std::string, double> aggregates;  // arithmetic means over covered episodes
  std::map<std::string, int> counts;         // episodes covered by each aggregate
  std::optional<PerceptualScores> perceptual;
  std::string inputs_hash;
  std::map<std::string, std::string> environment;
  double wall_seconds = 0;

  bool empty() const { return episodes.empty(); }
};

struct BenchmarkOptions {
  std::string out_dir;  // predictions archived here when non-empty
  int workers = 1;
  /// Builds one backend context per worker; defaults to the stub backend.
  std::function<std::unique_ptr<DenoiserBackend>()> backend_factory;
  PerceptualBackend* perceptual = nullptr;
  InversionCache* inversion_cache = nullptr;  // shared; only used with one worker
};

/// Protocol assumptions worth stating in a report for these build options.
std::vector<std::string> protocol_notes(const EpisodeBuildOptions& build);

/// Scores every episode; per-episode failures are recorded, never thrown.
MetricReport run_benchmark(const std::vector<EpisodeSpec>& episodes, const DatasetAdapter& ds,
                           const BenchmarkOptions& opts);

/// Means of the stored per-episode scores (recomputing from the table).
void recompute_aggregates(MetricReport& report);

/// Scores one decoded prediction against its groundtruth annotation.
std::map<std::string, double> score_prediction(TaskKind task, const ImageRGB& prediction, const TaskAnnotation& gt,
                                               int num_classes, bool* undefined = nullptr);

std::string report_json(const MetricReport& report);
std::string report_table(const MetricReport& report);
void write_report(const MetricReport& report, const std::string& dir, const std::string& stem = "report");

/// Build/run environment: compiler, build type, threads, platform.
std::map<std::string, std::string> environment_fingerprint();

/// Grid of config overrides: "key=v1,v2;key2=w1,w2" (keys as in config files).
struct AblationGrid {
  std::vector<std::pair<std::string, std::vector<std::string>>> axes;

  static AblationGrid parse(const std::string& text);
  /// Cartesian product in axis order, the first axis varying slowest.
  std::vector<KeyValues> cells() const;
};

struct AblationRow {
  KeyValues overrides;
  std::string label;
  MetricReport report;
};

/// Runs one benchmark per grid cell. Failures stay inside the cell's report.
std::vector<AblationRow> run_ablation(const AblationGrid& grid, const DatasetAdapter& ds,
                                      const EpisodeBuildOptions& build, const VICLConfig& base,
                                      VisionEncoderBackend* encoder, const BenchmarkOptions& opts);

std::string ablation_json(const std::vector<AblationRow>& rows);
std::string ablation_table(const std::vector<AblationRow>& rows);

}  // namespace sdvicl
