// Copyright 2026 The sdvicl Authors.
// SPDX-License-Identifier: Apache-2.0

#include "sdvicl/benchmark/runner.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "sdvicl/core/archive.hpp"
#include "sdvicl/io/image_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace sdvicl {
namespace {

using Clock = std::chrono::steady_clock;

struct EpisodeOutcome {
  EpisodeScore score;
  std::optional<ImageRGB> prediction;  // kept for set-level metrics
  std::optional<ImageRGB> reference;
};

EpisodeOutcome run_one(const EpisodeSpec& spec, const DatasetAdapter& ds, DenoiserBackend& backend,
                       const BenchmarkOptions& opts, bool keep_images) {
  EpisodeOutcome out;
  EpisodeScore& sc = out.score;
  sc.query_id = spec.query_id;
  sc.prompt_ids = spec.prompt_ids;
  const auto start = Clock::now();
  try {
    const int size = spec.config.image_size;
    const Sample query = load_sample(ds, spec.query_id, spec.task, size);
    PromptEpisode ep;
    ep.query = task_query(spec.task, query.image);
    ep.task = spec.task;
    ep.config = spec.config;
    ep.query_id = spec.query_id;
    for (const auto& pid : spec.prompt_ids) {
      const Sample s = load_sample(ds, pid, spec.task, size);
      ep.prompts.push_back({task_query(spec.task, s.image), encode_target(s.annotation), pid});
    }
    RunOptions ro;
    if (opts.workers <= 1) ro.cache = opts.inversion_cache;
    const EpisodeResult res = run_episode(ep, backend, ro);

    bool undefined = false;
    sc.scores = score_prediction(spec.task, res.prediction, query.annotation, ds.num_classes(), &undefined);
    if (undefined) sc.status = "undefined";

    if (!opts.out_dir.empty()) {
      const std::string hash = hex64(content_hash(res.prediction));
      sc.prediction_path = "predictions/" + hash.substr(0, 2) + "/" + hash + ".png";
      save_image(res.prediction, (fs::path(opts.out_dir) / sc.prediction_path).string());
    }
    if (keep_images) {
      out.prediction = res.prediction;
      out.reference = encode_target(query.annotation);
    }
  } catch (const Error& e) {
    sc.status = "failed";
    sc.error_kind = to_string(e.kind());
    sc.error = e.what();
    sc.scores.clear();
  } catch (const std::exception& e) {
    sc.status = "failed";
    sc.error_kind = "internal";
    sc.error = e.what();
    sc.scores.clear();
  }
  sc.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return out;
}

json to_json(const KeyValues& kv) {
  json j = json::object();
  for (const auto& [k, v] : kv) j[k] = v;
  return j;
}

json report_to_json(const MetricReport& r) {
  json j;
  j["dataset"] = r.dataset;
  j["split"] = r.split;
  j["task"] = to_string(r.task);
  j["config"] = to_json(to_key_values(r.config));
  j["seed"] = r.config.seed;
  j["backend_id"] = r.backend_id;
  j["pool"] = r.pool;
  j["notes"] = r.notes;
  j["inputs_hash"] = r.inputs_hash;
  j["environment"] = r.environment;
  j["wall_seconds"] = r.wall_seconds;
  j["empty"] = r.empty();
  j["aggregates"] = r.aggregates;
  j["counts"] = r.counts;
  json eps = json::array();
  for (const auto& e : r.episodes) {
    json je;
    je["query_id"] = e.query_id;
    je["prompt_ids"] = e.prompt_ids;
    je["status"] = e.status;
    je["scores"] = e.scores;
    je["seconds"] = e.seconds;
    if (!e.error.empty()) {
      je["error_kind"] = e.error_kind;
      je["error"] = e.error;
    }
    if (!e.prediction_path.empty()) je["prediction"] = e.prediction_path;
    eps.push_back(je);
  }
  j["episodes"] = eps;
  if (r.perceptual) {
    json p;
    const auto& ps = *r.perceptual;
    p["backend_id"] = ps.backend_id;
    p["lpips"] = ps.lpips ? json(*ps.lpips) : json("skipped");
    p["fid"] = ps.fid ? json(*ps.fid) : json("skipped");
    p["skipped"] = ps.skipped;
    p["pred_count"] = ps.pred_count;
    p["ref_count"] = ps.ref_count;
    j["perceptual"] = p;
  }
  return j;
}

std::string cell_label(const KeyValues& cell) {
  std::string label;
  for (const auto& [k, v] : cell) label += (label.empty() ? "" : " ") + k + "=" + v;
  if (auto it = cell.find("variant"); it != cell.end() && parse_variant(it->second) == AttentionVariant::kQueryC_KeyA) {
    label += " [default]";
  }
  if (auto it = cell.find("beta"); it != cell.end() && std::stod(it->second) == 1.0) label += " [contrast identity]";
  return label.empty() ? "base" : label;
}

std::vector<std::string> split_list(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

}  // namespace

std::map<std::string, double> score_prediction(TaskKind task, const ImageRGB& prediction, const TaskAnnotation& gt,
                                               int num_classes, bool* undefined) {
  if (undefined) *undefined = false;
  const TaskAnnotation pred = decode_prediction(task, prediction, num_classes);
  switch (task) {
    case TaskKind::kForegroundSegmentation:
      return {{"iou", iou(std::get<BinaryMask>(pred), std::get<BinaryMask>(gt))}};
    case TaskKind::kSingleObjectDetection:
      return {{"iou", iou(box_mask(std::get<Detection>(pred)), box_mask(std::get<Detection>(gt)))}};
    case TaskKind::kSemanticSegmentation: {
      const auto s = semseg_scores(std::get<ClassMap>(pred), std::get<ClassMap>(gt), num_classes);
      if (!s) break;
      return {{"miou", s->miou}, {"accuracy", s->accuracy}};
    }
    case TaskKind::kKeypointDetection: {
      const auto& g = std::get<KeypointSet>(gt);
      const auto s = keypoint_scores(std::get<KeypointSet>(pred), g, pck_norm_length(g), kPckFraction);
      if (!s) break;
      return {{"mse", s->mse}, {"pck", s->pck}};
    }
    case TaskKind::kEdgeDetection:
    case TaskKind::kColorization: return {{"mse", pixel_mse(prediction, encode_target(gt))}};
  }
  if (undefined) *undefined = true;
  return {};
}

std::vector<std::string> protocol_notes(const EpisodeBuildOptions& build) {
  std::vector<std::string> notes;
  const bool class_task = build.task == TaskKind::kForegroundSegmentation ||
                          build.task == TaskKind::kSingleObjectDetection ||
                          build.task == TaskKind::kSemanticSegmentation;
  if (build.self_prompt) {
    notes.push_back("self-prompt: each query is its own prompt image with its groundtruth as target");
  } else {
    notes.push_back(std::string("prompts: ") +
                    (build.selection == PromptSelection::kNearest ? "nearest neighbours by embedding cosine"
                                                                  : "seeded random draw") +
                    (build.same_class && class_task ? ", restricted to the query's class (assumption)" : ""));
  }
  if (build.subsample > 0) notes.push_back("seeded subsample of " + std::to_string(build.subsample) + " queries");
  switch (build.task) {
    case TaskKind::kForegroundSegmentation:
      notes.push_back("iou aggregate = mean over episodes of per-episode foreground IoU");
      break;
    case TaskKind::kSingleObjectDetection:
      notes.push_back("single-instance images only; empty detections score IoU 0");
      break;
    case TaskKind::kSemanticSegmentation:
      notes.push_back("void pixels ignored at scoring only; per-image IoU over classes present in groundtruth");
      break;
    case TaskKind::kKeypointDetection:
      notes.push_back("pck threshold = 0.1 x longer image side; unmatched points charged the image diagonal");
      break;
    case TaskKind::kEdgeDetection: notes.push_back("groundtruth soft edge maps ingested as provided"); break;
    case TaskKind::kColorization:
      notes.push_back("fid reference set = the groundtruth colour images of the same episodes");
      break;
  }
  return notes;
}

void recompute_aggregates(MetricReport& report) {
  std::map<std::string, double> sums;
  report.counts.clear();
  for (const auto& e : report.episodes) {
    if (e.status != "ok") continue;
    for (const auto& [k, v] : e.scores) {
      sums[k] += v;
      ++report.counts[k];
    }
  }
  report.aggregates.clear();
  for (const auto& [k, s] : sums) report.aggregates[k] = s / report.counts[k];
  int failed = 0, undefined = 0;
  for (const auto& e : report.episodes) {
    failed += e.status == "failed";
    undefined += e.status == "undefined";
  }
  report.counts["episodes"] = int(report.episodes.size());
  report.counts["failed"] = failed;
  report.counts["undefined"] = undefined;
}

MetricReport run_benchmark(const std::vector<EpisodeSpec>& episodes, const DatasetAdapter& ds,
                           const BenchmarkOptions& opts) {
  const auto start = Clock::now();
  MetricReport report;
  report.dataset = ds.name();
  report.environment = environment_fingerprint();
  if (!episodes.empty()) {
    report.split = episodes.front().split;
    report.task = episodes.front().task;
    report.config = episodes.front().config;
    report.pool = ds.pool_description(report.split);
  }

  Fnv1a h;
  h.update(ds.name());
  for (const auto& e : episodes) {
    h.update(e.split);
    h.update(to_string(e.task));
    h.update(e.query_id);
    for (const auto& p : e.prompt_ids) h.update(p);
    h.update(format_key_values(to_key_values(e.config)));
  }
  report.inputs_hash = hex64(h.digest());

  auto factory = opts.backend_factory ? opts.backend_factory : [] { return make_backend("stub"); };
  const bool keep_images = report.task == TaskKind::kColorization;
  std::vector<EpisodeOutcome> outcomes(episodes.size());
  const int workers = std::max(1, std::min<int>(opts.workers, int(episodes.size())));
  std::atomic<std::size_t> next{0};
  std::string backend_id;
  auto work = [&](DenoiserBackend& backend) {
    for (std::size_t i = next++; i < episodes.size(); i = next++) {
      outcomes[i] = run_one(episodes[i], ds, backend, opts, keep_images);
    }
  };
  if (!episodes.empty()) {
    std::vector<std::unique_ptr<DenoiserBackend>> backends;
    for (int w = 0; w < workers; ++w) backends.push_back(factory());
    backend_id = backends.front()->id();
    if (workers == 1) {
      work(*backends.front());
    } else {
      std::vector<std::thread> threads;
      for (int w = 0; w < workers; ++w) threads.emplace_back(work, std::ref(*backends[w]));
      for (auto& t : threads) t.join();
    }
  }
  report.backend_id = backend_id;

  std::vector<ImageRGB> preds, refs;
  for (auto& o : outcomes) {
    if (o.prediction && o.score.status == "ok") {
      preds.push_back(std::move(*o.prediction));
      refs.push_back(std::move(*o.reference));
    }
    report.episodes.push_back(std::move(o.score));
  }
  if (keep_images) report.perceptual = perceptual_scores(preds, refs, opts.perceptual);
  recompute_aggregates(report);
  if (report.perceptual && report.perceptual->lpips) report.aggregates["lpips"] = *report.perceptual->lpips;
  if (report.perceptual && report.perceptual->fid) report.aggregates["fid"] = *report.perceptual->fid;
  report.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return report;
}

std::string report_json(const MetricReport& report) { return report_to_json(report).dump(2); }

std::string report_table(const MetricReport& r) {
  std::ostringstream os;
  os << "dataset " << r.dataset << "  split " << r.split << "  task " << to_string(r.task) << "\n";
  os << "backend " << r.backend_id << "  seed " << r.config.seed << "  inputs " << r.inputs_hash << "\n";
  if (r.empty()) {
    os << "(no episodes)\n";
    return os.str();
  }
  char line[160];
  std::snprintf(line, sizeof(line), "%-16s %10s %6s\n", "metric", "mean", "n");
  os << line;
  for (const auto& [k, v] : r.aggregates) {
    auto it = r.counts.find(k);
    std::snprintf(line, sizeof(line), "%-16s %10.4f %6d\n", k.c_str(), v, it == r.counts.end() ? 0 : it->second);
    os << line;
  }
  os << "episodes " << r.counts.at("episodes") << "  failed " << r.counts.at("failed") << "  undefined "
     << r.counts.at("undefined") << "  wall " << r.wall_seconds << " s\n";
  for (const auto& n : r.notes) os << "note: " << n << "\n";
  return os.str();
}

void write_report(const MetricReport& report, const std::string& dir, const std::string& stem) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::kIo, "cannot create " + dir + ": " + ec.message());
  for (const auto& [ext, text] : {std::pair{".json", report_json(report)}, std::pair{".txt", report_table(report)}}) {
    const fs::path p = fs::path(dir) / (stem + ext);
    std::ofstream out(p);
    out << text;
    if (!out) throw Error(ErrorKind::kIo, "cannot write " + p.string());
  }
}

std::map<std::string, std::string> environment_fingerprint() {
  std::map<std::string, std::string> env;
#if defined(__clang__)
  env["compiler"] = "clang " __clang_version__;
#elif defined(__GNUC__)
  env["compiler"] = "gcc " __VERSION__;
#endif
#ifdef NDEBUG
  env["build"] = "release";
#else
  env["build"] = "debug";
#endif
#if defined(__linux__)
  env["platform"] = "linux";
#elif defined(__APPLE__)
  env["platform"] = "macos";
#else
  env["platform"] = "other";
#endif
  env["threads"] = std::to_string(std::thread::hardware_concurrency());
  env["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                 std::to_string(EIGEN_MINOR_VERSION);
  return env;
}

AblationGrid AblationGrid::parse(const std::string& text) {
  AblationGrid grid;
  for (const auto& axis : split_list(text, ';')) {
    const auto eq = axis.find('=');
    if (eq == std::string::npos) throw ConfigError("grid", "axis '" + axis + "' lacks '='");
    std::string key = axis.substr(0, eq);
    key.erase(key.find_last_not_of(" \t") + 1);
    auto values = split_list(axis.substr(eq + 1), ',');
    if (values.empty()) throw ConfigError("grid", "axis '" + key + "' has no values");
    // "a..b" expands integer ranges.
    if (values.size() == 1 && values[0].find("..") != std::string::npos) {
      const auto dots = values[0].find("..");
      const int lo = std::stoi(values[0].substr(0, dots)), hi = std::stoi(values[0].substr(dots + 2));
      values.clear();
      for (int v = lo; v <= hi; ++v) values.push_back(std::to_string(v));
    }
    grid.axes.emplace_back(key, values);
  }
  // Resolution sets are written with '+' inside a cell ("16+32+64").
  for (auto& [key, values] : grid.axes) {
    if (key != "resolutions") continue;
    for (auto& v : values) std::replace(v.begin(), v.end(), '+', ',');
  }
  return grid;
}

std::vector<KeyValues> AblationGrid::cells() const {
  std::vector<KeyValues> out{KeyValues{}};
  for (const auto& [key, values] : axes) {
    std::vector<KeyValues> next;
    for (const auto& cell : out) {
      for (const auto& v : values) {
        KeyValues c = cell;
        c[key] = v;
        next.push_back(std::move(c));
      }
    }
    out = std::move(next);
  }
  return out;
}

std::vector<AblationRow> run_ablation(const AblationGrid& grid, const DatasetAdapter& ds,
                                      const EpisodeBuildOptions& build, const VICLConfig& base,
                                      VisionEncoderBackend* encoder, const BenchmarkOptions& opts) {
  std::vector<AblationRow> rows;
  EmbeddingCache cache(encoder ? encoder->id() : "none");
  for (const auto& cell : grid.cells()) {
    AblationRow row;
    row.overrides = cell;
    row.label = cell_label(cell);
    try {
      VICLConfig cfg = base;
      apply_key_values(cfg, cell);
      cfg = validate_config(cfg);
      EpisodeBuildOptions b = build;
      b.n_prompts = cfg.n_prompts;
      b.image_size = cfg.image_size;
      const auto specs = build_episodes(ds, b, cfg, encoder, encoder ? &cache : nullptr);
      row.report = run_benchmark(specs, ds, opts);
      row.report.notes = protocol_notes(b);
    } catch (const Error& e) {
      row.report.dataset = ds.name();
      row.report.notes.push_back(std::string("cell failed (") + to_string(e.kind()) + "): " + e.what());
      recompute_aggregates(row.report);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string ablation_json(const std::vector<AblationRow>& rows) {
  json j = json::array();
  for (const auto& r : rows) {
    json jr;
    jr["label"] = r.label;
    jr["overrides"] = to_json(r.overrides);
    jr["report"] = report_to_json(r.report);
    j.push_back(jr);
  }
  return j.dump(2);
}

std::string ablation_table(const std::vector<AblationRow>& rows) {
  std::ostringstream os;
  std::vector<std::string> metrics;
  for (const auto& r : rows) {
    for (const auto& [k, v] : r.report.aggregates) {
      if (std::find(metrics.begin(), metrics.end(), k) == metrics.end()) metrics.push_back(k);
    }
  }
  char buf[64];
  os << "cell";
  for (const auto& m : metrics) os << "\t" << m;
  os << "\twall_s\tfailed\n";
  for (const auto& r : rows) {
    os << r.label;
    for (const auto& m : metrics) {
      auto it = r.report.aggregates.find(m);
      if (it == r.report.aggregates.end()) {
        os << "\t-";
      } else {
        std::snprintf(buf, sizeof(buf), "\t%.4f", it->second);
        os << buf;
      }
    }
    std::snprintf(buf, sizeof(buf), "\t%.2f", r.report.wall_seconds);
    auto f = r.report.counts.find("failed");
    os << buf << "\t" << (f == r.report.counts.end() ? 0 : f->second) << "\n";
  }
  return os.str();
}

}  // namespace sdvicl
