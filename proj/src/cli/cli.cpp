// Copyright 2026 The sdvicl Authors.
// SPDX-License-Identifier: Apache-2.0

#include "sdvicl/cli/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "sdvicl/benchmark/runner.hpp"
#include "sdvicl/io/image_io.hpp"
#include "sdvicl/pipeline/trace_report.hpp"

namespace fs = std::filesystem;

namespace sdvicl {
namespace {

const char* const kConfigKeys[] = {"steps",      "tau",  "beta",  "gamma",
                                   "resolutions", "ensemble", "n_prompts", "seed",
                                   "image_size", "vicl", "adain", "adain_before_forward",
                                   "reuse_query_noise", "variant"};

struct CommonArgs {
  std::string config_file;
  std::vector<std::string> sets;
  std::map<std::string, std::string> flags;  // config key -> value given on the command line
  std::string out_dir;
  std::string backend;
};

struct DataArgs {
  std::string dataset, root, split, task, selection, encoder = "thumbnail", perceptual;
  int subsample = -1;
  int workers = 0;
  std::string same_class;
  bool self_prompt = false;
};

std::string dashed(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return key;
}

void add_common(CLI::App* app, CommonArgs& a, bool needs_out = true) {
  app->add_option("--config", a.config_file, "key = value config file")->check(CLI::ExistingFile);
  app->add_option("--set", a.sets, "extra KEY=VALUE override (repeatable)");
  for (const char* key : kConfigKeys) app->add_option("--" + dashed(key), a.flags[key], std::string("config key ") + key);
  auto* out = app->add_option("--out-dir", a.out_dir, "directory receiving every output file");
  if (needs_out) out->required();
  app->add_option("--backend", a.backend, "denoiser backend (default: $SDVICL_BACKEND or stub)");
}

void add_data(CLI::App* app, DataArgs& d) {
  app->add_option("--dataset", d.dataset, "pascal5i | cityscapes | deepfashion | nyudv2 | imagenet | synthetic");
  app->add_option("--root", d.root, "dataset root in the normalized layout");
  app->add_option("--split", d.split, "split name (pascal5i: fold0..fold3)");
  app->add_option("--task", d.task, "fgseg | detection | semseg | keypoints | edges | colorization");
  app->add_option("--subsample", d.subsample, "seeded number of queries (0 = all)");
  app->add_option("--selection", d.selection, "nearest | random prompt selection");
  app->add_option("--same-class", d.same_class, "restrict prompt pools to the query class (true|false)");
  app->add_flag("--self-prompt", d.self_prompt, "use each query as its own prompt");
  app->add_option("--workers", d.workers, "parallel pipeline workers");
  app->add_option("--encoder", d.encoder, "vision encoder for retrieval");
  app->add_option("--perceptual", d.perceptual, "perceptual metric backend (empty = skipped)");
}

struct Resolved {
  VICLConfig cfg;
  KeyValues extra;  // data.* and bench.* keys
};

Resolved resolve_config(const CommonArgs& a) {
  Resolved r;
  KeyValues kv;
  if (!a.config_file.empty()) kv = read_key_values(a.config_file);
  for (const auto& [k, v] : kv) {
    if (k.rfind("data.", 0) == 0 || k.rfind("bench.", 0) == 0) r.extra[k] = v;
  }
  for (const auto& [k, v] : a.flags) {
    if (!v.empty()) kv[k] = v;
  }
  for (const auto& s : a.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("set", "expected KEY=VALUE, got '" + s + "'");
    kv[s.substr(0, eq)] = s.substr(eq + 1);
  }
  apply_key_values(r.cfg, kv);
  r.cfg = validate_config(r.cfg);
  return r;
}

std::string pick(const std::string& flag, const KeyValues& extra, const std::string& key, const std::string& fallback) {
  if (!flag.empty()) return flag;
  auto it = extra.find(key);
  return it == extra.end() ? fallback : it->second;
}

bool parse_flag_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key, "expected true or false, got '" + v + "'");
}

std::string backend_name(const CommonArgs& a) {
  if (!a.backend.empty()) return a.backend;
  const char* env = std::getenv("SDVICL_BACKEND");
  return env && *env ? env : "stub";
}

void require_file(const std::string& path, const std::string& what) {
  if (!fs::is_regular_file(path)) throw Error(ErrorKind::kIo, what + " not found: " + path);
}

void prepare_out_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::kIo, "cannot create output directory " + dir + ": " + ec.message());
}

std::string out_path(const CommonArgs& a, const std::string& name) { return (fs::path(a.out_dir) / name).string(); }

std::set<int> parse_int_set(const std::string& s) {
  std::set<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.insert(std::stoi(item));
  }
  return out;
}

struct PoolEntry {
  std::string id;
  std::string image_path;
  std::string target_path;
};

// Prompt pool directory: images/<id>.png with matching targets/<id>.png.
std::vector<PoolEntry> scan_pool(const std::string& dir) {
  const fs::path images = fs::path(dir) / "images", targets = fs::path(dir) / "targets";
  if (!fs::is_directory(images)) throw Error(ErrorKind::kIo, "prompt pool has no images/ directory: " + dir);
  std::vector<PoolEntry> out;
  for (const auto& e : fs::directory_iterator(images)) {
    if (!e.is_regular_file()) continue;
    const std::string id = e.path().stem().string();
    fs::path target;
    for (const char* ext : {".png", ".jpg", ".jpeg"}) {
      if (fs::exists(targets / (id + ext))) target = targets / (id + ext);
    }
    if (target.empty()) throw Error(ErrorKind::kIo, "pool image " + id + " has no target under " + targets.string());
    out.push_back({id, e.path().string(), target.string()});
  }
  std::sort(out.begin(), out.end(), [](const PoolEntry& a, const PoolEntry& b) { return a.id < b.id; });
  if (out.empty()) throw Error(ErrorKind::kIo, "prompt pool is empty: " + dir);
  return out;
}

// ---------------------------------------------------------------------------

int cmd_predict(const CommonArgs& a, const std::string& query, const std::vector<std::string>& prompt_specs,
                const std::string& pool_dir, const std::string& task_name, bool self_retrieval, bool cache_inversions,
                const std::string& capture_layers, const std::string& capture_steps, bool save_trajectories) {
  Resolved r = resolve_config(a);
  const TaskKind task = parse_task(task_name);
  require_file(query, "query image");
  std::vector<std::pair<std::string, std::string>> pairs;
  for (const auto& s : prompt_specs) {
    const auto colon = s.rfind(':');
    if (colon == std::string::npos) throw ConfigError("prompt", "expected IMAGE:TARGET, got '" + s + "'");
    pairs.emplace_back(s.substr(0, colon), s.substr(colon + 1));
    require_file(pairs.back().first, "prompt image");
    require_file(pairs.back().second, "prompt target");
  }
  std::vector<PoolEntry> pool;
  if (!pool_dir.empty()) pool = scan_pool(pool_dir);
  if (pairs.empty() && pool.empty()) throw ConfigError("prompt", "give --prompt pairs or --retrieve a pool");
  prepare_out_dir(a.out_dir);

  const int size = r.cfg.image_size;
  PromptEpisode ep;
  ep.task = task;
  ep.query = task_query(task, square_crop(load_image(query), size));
  ep.query_id = fs::path(query).stem().string();
  for (const auto& [img, tgt] : pairs) {
    ep.prompts.push_back({task_query(task, square_crop(load_image(img), size)), square_crop(load_image(tgt), size),
                          fs::path(img).stem().string()});
  }
  nlohmann::json retrieved = nlohmann::json::array();
  if (!pool.empty()) {
    auto encoder = make_encoder("thumbnail");
    const std::uint64_t query_hash = content_hash(ep.query);
    std::vector<EmbeddingRecord> recs;
    std::string query_pool_id;
    for (const auto& p : pool) {
      const ImageRGB img = task_query(task, square_crop(load_image(p.image_path), size));
      if (content_hash(img) == query_hash) query_pool_id = p.id;
      recs.push_back(embed(img, *encoder, p.id));
    }
    EmbeddingRecord q = embed(ep.query, *encoder, query_pool_id.empty() ? std::string() : query_pool_id);
    const int want = std::max(0, r.cfg.n_prompts - int(ep.prompts.size()));
    if (want > 0) {
      for (const auto& hit : retrieve(q, recs, want, self_retrieval)) {
        const auto& p = *std::find_if(pool.begin(), pool.end(), [&](const PoolEntry& e) { return e.id == hit.image_id; });
        ep.prompts.push_back({task_query(task, square_crop(load_image(p.image_path), size)),
                              square_crop(load_image(p.target_path), size), p.id});
        retrieved.push_back({{"id", hit.image_id}, {"cosine", hit.cosine}});
      }
    }
  }
  r.cfg.n_prompts = int(ep.prompts.size());
  ep.config = r.cfg;

  auto backend = make_backend(backend_name(a));
  std::unique_ptr<InversionCache> cache;
  if (cache_inversions) cache = std::make_unique<InversionCache>(out_path(a, "cache"));
  AttentionCapture capture;
  const bool capturing = !capture_layers.empty() || !capture_steps.empty();
  if (capturing) {
    capture.layer_filter = parse_int_set(capture_layers);
    capture.step_filter = parse_int_set(capture_steps);
  }
  RunOptions ro{cache.get(), capturing ? &capture : nullptr, false};
  const EpisodeResult res = run_episode(ep, *backend, ro);

  save_image(res.prediction, out_path(a, "prediction.png"));
  if (capturing) capture.save(out_path(a, "attention.svta"));
  if (save_trajectories) {
    for (const auto& [name, traj] : res.trace.trajectories) save_trajectory(traj, out_path(a, "trajectories/" + name + ".svta"));
  }
  std::map<std::string, std::string> extra{{"task", to_string(task)}, {"query", query}};
  if (!retrieved.empty()) extra["retrieved"] = retrieved.dump();
  write_text_atomic(out_path(a, "trace.json"), trace_json(res.trace, extra));
  std::cout << "prediction " << out_path(a, "prediction.png") << "  (" << res.trace.timings.total_s << " s)\n";
  return kExitOk;
}

int cmd_invert(const CommonArgs& a, const std::string& image) {
  const Resolved r = resolve_config(a);
  require_file(image, "image");
  prepare_out_dir(a.out_dir);
  auto backend = make_backend(backend_name(a));
  const ImageRGB img = square_crop(load_image(image), r.cfg.image_size);
  const Latent z0 = encode(img, *backend);
  const DenoiseSchedule sched = make_schedule(r.cfg.steps, backend->noise_levels());
  const NoiseTrajectory traj = invert(z0, sched, *backend, path_seed(r.cfg.seed, z0));
  const Latent rec = reconstruct(traj, *backend);
  const ImageRGB rec_img = decode(rec, *backend);
  save_trajectory(traj, out_path(a, "trajectory.svta"));
  save_image(rec_img, out_path(a, "reconstruction.png"));
  nlohmann::json j;
  j["image"] = image;
  j["input_hash"] = hex64(content_hash(img));
  j["backend_id"] = backend->id();
  j["steps"] = r.cfg.steps;
  j["seed"] = traj.seed;
  j["latent_max_abs_error"] = (rec.values - z0.values).cwiseAbs().maxCoeff();
  j["psnr_vs_autoencoder_db"] = psnr(rec_img, decode(z0, *backend));
  write_text_atomic(out_path(a, "invert.json"), j.dump(2));
  std::cout << "trajectory " << out_path(a, "trajectory.svta") << "\n";
  return kExitOk;
}

int cmd_retrieve(const CommonArgs& a, const std::string& query, const std::string& pool_dir, int n, bool self) {
  const Resolved r = resolve_config(a);
  require_file(query, "query image");
  const auto pool = scan_pool(pool_dir);
  prepare_out_dir(a.out_dir);
  auto encoder = make_encoder("thumbnail");
  const ImageRGB q = square_crop(load_image(query), r.cfg.image_size);
  std::vector<EmbeddingRecord> recs;
  std::string query_pool_id;
  for (const auto& p : pool) {
    const ImageRGB img = square_crop(load_image(p.image_path), r.cfg.image_size);
    if (content_hash(img) == content_hash(q)) query_pool_id = p.id;
    recs.push_back(embed(img, *encoder, p.id));
  }
  nlohmann::json j;
  j["query"] = query;
  j["encoder_id"] = encoder->id();
  j["pool"] = pool_dir;
  j["hits"] = nlohmann::json::array();
  for (const auto& h : retrieve(embed(q, *encoder, query_pool_id), recs, n, self)) {
    j["hits"].push_back({{"id", h.image_id}, {"cosine", h.cosine}});
    std::cout << h.image_id << "\t" << h.cosine << "\n";
  }
  write_text_atomic(out_path(a, "retrieval.json"), j.dump(2));
  return kExitOk;
}

struct BenchSetup {
  Resolved r;
  std::unique_ptr<DatasetAdapter> ds;
  EpisodeBuildOptions build;
  std::unique_ptr<VisionEncoderBackend> encoder;
  std::unique_ptr<PerceptualBackend> perceptual;
  BenchmarkOptions opts;
};

BenchSetup setup_bench(const CommonArgs& a, const DataArgs& d) {
  BenchSetup s;
  s.r = resolve_config(a);
  const KeyValues& x = s.r.extra;
  const std::string dataset = pick(d.dataset, x, "data.dataset", "");
  if (dataset.empty()) throw ConfigError("dataset", "required (--dataset or data.dataset)");
  s.ds = make_dataset(dataset, pick(d.root, x, "data.root", ""));
  s.build.split = pick(d.split, x, "data.split", dataset == "synthetic" ? "val" : "");
  if (s.build.split.empty()) throw ConfigError("split", "required (--split or data.split)");
  s.build.task = parse_task(pick(d.task, x, "data.task", "fgseg"));
  s.build.n_prompts = s.r.cfg.n_prompts;
  s.build.seed = s.r.cfg.seed;
  s.build.image_size = s.r.cfg.image_size;
  s.build.subsample = d.subsample >= 0 ? d.subsample : std::stoi(pick("", x, "bench.subsample", "0"));
  const std::string sel = pick(d.selection, x, "bench.selection", "nearest");
  if (sel != "nearest" && sel != "random") throw ConfigError("selection", "nearest or random");
  s.build.selection = sel == "nearest" ? PromptSelection::kNearest : PromptSelection::kRandom;
  s.build.same_class = parse_flag_bool("same_class", pick(d.same_class, x, "bench.same_class", "true"));
  s.build.self_prompt = d.self_prompt || parse_flag_bool("self_prompt", pick("", x, "bench.self_prompt", "false"));
  if (s.build.selection == PromptSelection::kNearest && !s.build.self_prompt) s.encoder = make_encoder(d.encoder);
  const std::string perceptual = pick(d.perceptual, x, "bench.perceptual", "");
  if (!perceptual.empty()) s.perceptual = make_perceptual(perceptual);

  const std::string backend = backend_name(a);
  make_backend(backend);  // fail early with a backend error
  s.opts.out_dir = a.out_dir;
  s.opts.workers = d.workers > 0 ? d.workers : std::stoi(pick("", x, "bench.workers", "1"));
  s.opts.backend_factory = [backend] { return make_backend(backend); };
  s.opts.perceptual = s.perceptual.get();
  return s;
}

int cmd_bench(const CommonArgs& a, const DataArgs& d) {
  BenchSetup s = setup_bench(a, d);
  prepare_out_dir(a.out_dir);
  EmbeddingCache cache(s.encoder ? s.encoder->id() : "none");
  const auto specs = build_episodes(*s.ds, s.build, s.r.cfg, s.encoder.get(), s.encoder ? &cache : nullptr);
  MetricReport report = run_benchmark(specs, *s.ds, s.opts);
  report.notes = protocol_notes(s.build);
  if (report.empty()) report.split = s.build.split, report.task = s.build.task, report.config = s.r.cfg;
  write_report(report, a.out_dir);
  std::cout << report_table(report);
  return kExitOk;
}

int cmd_ablate(const CommonArgs& a, const DataArgs& d, const std::string& grid_text) {
  BenchSetup s = setup_bench(a, d);
  const AblationGrid grid = AblationGrid::parse(grid_text);
  prepare_out_dir(a.out_dir);
  s.opts.out_dir = out_path(a, "predictions-by-cell");
  const auto rows = run_ablation(grid, *s.ds, s.build, s.r.cfg, s.encoder.get(), s.opts);
  write_text_atomic(out_path(a, "ablation.json"), ablation_json(rows));
  write_text_atomic(out_path(a, "ablation.txt"), ablation_table(rows));
  std::cout << ablation_table(rows);
  return kExitOk;
}

int cmd_cache_embeddings(const CommonArgs& a, const DataArgs& d) {
  const Resolved r = resolve_config(a);
  const std::string dataset = pick(d.dataset, r.extra, "data.dataset", "");
  if (dataset.empty()) throw ConfigError("dataset", "required (--dataset or data.dataset)");
  auto ds = make_dataset(dataset, pick(d.root, r.extra, "data.root", ""));
  const std::string split = pick(d.split, r.extra, "data.split", dataset == "synthetic" ? "val" : "");
  if (split.empty()) throw ConfigError("split", "required (--split or data.split)");
  auto encoder = make_encoder(d.encoder);
  prepare_out_dir(a.out_dir);
  EmbeddingCache cache(encoder->id());
  std::set<std::string> seen;
  auto add = [&](const std::vector<DatasetEntry>& entries) {
    for (const auto& e : entries) {
      if (!seen.insert(e.id).second) continue;
      cache.insert(embed(square_crop(ds->image(e.id), r.cfg.image_size), *encoder, ds->name() + "/" + e.id));
    }
  };
  add(ds->entries(split));
  add(ds->pool(split));
  const std::string path = out_path(a, dataset + "-" + split + ".embeddings.svta");
  cache.save(path);
  std::cout << cache.size() << " embeddings -> " << path << "\n";
  return kExitOk;
}

}  // namespace

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kIo:
    case ErrorKind::kMalformedTrajectory: return kExitIo;
    case ErrorKind::kBackend: return kExitBackend;
    case ErrorKind::kNumerical:
    case ErrorKind::kDegenerateStatistics: return kExitNumerical;
    default: return kExitConfig;
  }
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Training-free visual in-context learning on a latent diffusion model", "sdvicl"};
  app.require_subcommand(1, 1);

  CommonArgs common;
  DataArgs data;

  std::string query, pool_dir, task = "fgseg", capture_layers, capture_steps, image, grid;
  std::vector<std::string> prompts;
  bool self_retrieval = false, cache_inversions = false, save_trajectories = false;
  int n = 1;

  auto* predict = app.add_subcommand("predict", "run one episode and write the prediction");
  add_common(predict, common);
  predict->add_option("--query", query, "query image")->required();
  predict->add_option("--prompt", prompts, "prompt pair IMAGE:TARGET (repeatable)");
  predict->add_option("--retrieve", pool_dir, "pool directory (images/, targets/) to retrieve prompts from");
  predict->add_option("--task", task, "task tag");
  predict->add_flag("--self-retrieval", self_retrieval, "allow the query itself to be retrieved");
  predict->add_flag("--cache-inversions", cache_inversions, "cache inversions under <out-dir>/cache");
  predict->add_option("--capture-layers", capture_layers, "comma list of site layer indices to capture");
  predict->add_option("--capture-steps", capture_steps, "comma list of step indices to capture");
  predict->add_flag("--save-trajectories", save_trajectories, "write every path's noise trajectory");

  auto* inv = app.add_subcommand("invert", "invert one image and check the round trip");
  add_common(inv, common);
  inv->add_option("--image", image, "image to invert")->required();

  auto* ret = app.add_subcommand("retrieve", "rank pool images by embedding similarity");
  add_common(ret, common);
  ret->add_option("--query", query, "query image")->required();
  ret->add_option("--pool", pool_dir, "pool directory (images/, targets/)")->required();
  ret->add_option("-n", n, "number of neighbours");
  ret->add_flag("--self-retrieval", self_retrieval, "allow the query itself to be retrieved");

  auto* bench = app.add_subcommand("bench", "score a dataset split");
  add_common(bench, common);
  add_data(bench, data);

  auto* ablate = app.add_subcommand("ablate", "score a dataset split over a config grid");
  add_common(ablate, common);
  add_data(ablate, data);
  ablate->add_option("--grid", grid, "\"key=v1,v2;key2=w1,w2\"")->required();

  auto* cache = app.add_subcommand("cache-embeddings", "pre-compute retrieval embeddings for a split");
  add_common(cache, common);
  add_data(cache, data);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*predict) {
      return cmd_predict(common, query, prompts, pool_dir, task, self_retrieval, cache_inversions, capture_layers,
                         capture_steps, save_trajectories);
    }
    if (*inv) return cmd_invert(common, image);
    if (*ret) return cmd_retrieve(common, query, pool_dir, n, self_retrieval);
    if (*bench) return cmd_bench(common, data);
    if (*ablate) return cmd_ablate(common, data, grid);
    if (*cache) return cmd_cache_embeddings(common, data);
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.kind()) << "]: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitOk;
}

}  // namespace sdvicl
