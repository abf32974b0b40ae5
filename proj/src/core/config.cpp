// Copyright 2026 The sdvicl Authors.
// SPDX-License-Identifier: Apache-2.0

#include "sdvicl/core/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "sdvicl/core/error.hpp"

namespace sdvicl {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError(key, "expected a number, got '" + v + "'");
  }
}

long long parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    long long d = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError(key, "expected an integer, got '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  const std::string l = lower(v);
  if (l == "1" || l == "true" || l == "yes" || l == "on") return true;
  if (l == "0" || l == "false" || l == "no" || l == "off") return false;
  throw ConfigError(key, "expected a boolean, got '" + v + "'");
}

std::vector<int> parse_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    out.push_back(static_cast<int>(parse_int(key, item)));
  }
  return out;
}

}  // namespace

VICLConfig validate_config(VICLConfig cfg) {
  if (cfg.steps < 1) throw ConfigError("steps", "must be >= 1");
  if (!(cfg.tau > 0.0) || !std::isfinite(cfg.tau)) throw ConfigError("tau", "must be a positive finite number");
  if (!(cfg.beta >= 0.0) || !std::isfinite(cfg.beta)) throw ConfigError("beta", "must be >= 0");
  if (!(cfg.gamma >= 0.0) || !std::isfinite(cfg.gamma)) throw ConfigError("gamma", "must be >= 0");
  if (cfg.resolutions.empty()) throw ConfigError("resolutions", "must not be empty");
  for (int r : cfg.resolutions) {
    if (r != 16 && r != 32 && r != 64) throw ConfigError("resolutions", "entries must be 16, 32 or 64");
  }
  std::sort(cfg.resolutions.begin(), cfg.resolutions.end());
  cfg.resolutions.erase(std::unique(cfg.resolutions.begin(), cfg.resolutions.end()), cfg.resolutions.end());
  if (cfg.n_prompts < 1) throw ConfigError("n_prompts", "must be >= 1");
  if (cfg.image_size < 8 || cfg.image_size % 8 != 0) {
    throw ConfigError("image_size", "must be a positive multiple of 8");
  }
  return cfg;
}

const char* to_string(EnsembleMode mode) {
  return mode == EnsembleMode::kIwpe ? "iwpe" : "fe";
}

const char* to_string(AttentionVariant variant) {
  switch (variant) {
    case AttentionVariant::kQueryC_KeyA: return "qc_ka_vb";
    case AttentionVariant::kQueryD_KeyB: return "qd_kb_vb";
    case AttentionVariant::kQueryC_KeyB: return "qc_kb_vb";
    case AttentionVariant::kQueryD_KeyA: return "qd_ka_vb";
  }
  return "?";
}

EnsembleMode parse_ensemble(const std::string& text) {
  const std::string l = lower(trim(text));
  if (l == "iwpe") return EnsembleMode::kIwpe;
  if (l == "fe") return EnsembleMode::kFeatureEnsemble;
  throw ConfigError("ensemble", "expected 'iwpe' or 'fe', got '" + text + "'");
}

AttentionVariant parse_variant(const std::string& text) {
  const std::string l = lower(trim(text));
  for (auto v : {AttentionVariant::kQueryC_KeyA, AttentionVariant::kQueryD_KeyB, AttentionVariant::kQueryC_KeyB,
                 AttentionVariant::kQueryD_KeyA}) {
    if (l == to_string(v)) return v;
  }
  throw ConfigError("variant", "unknown attention variant '" + text + "'");
}

KeyValues parse_key_values(const std::string& text) {
  KeyValues kv;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto sep = line.find('=');
    if (sep == std::string::npos) sep = line.find(':');
    if (sep == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno), "expected 'key = value'");
    }
    kv[trim(line.substr(0, sep))] = trim(line.substr(sep + 1));
  }
  return kv;
}

KeyValues read_key_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_key_values(ss.str());
}

void apply_key_values(VICLConfig& cfg, const KeyValues& kv, const std::vector<std::string>& ignored_prefixes) {
  for (const auto& [key, value] : kv) {
    if (key == "steps") cfg.steps = static_cast<int>(parse_int(key, value));
    else if (key == "tau") cfg.tau = parse_double(key, value);
    else if (key == "beta") cfg.beta = parse_double(key, value);
    else if (key == "gamma") cfg.gamma = parse_double(key, value);
    else if (key == "resolutions") cfg.resolutions = parse_int_list(key, value);
    else if (key == "ensemble") cfg.ensemble = parse_ensemble(value);
    else if (key == "n_prompts") cfg.n_prompts = static_cast<int>(parse_int(key, value));
    else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(parse_int(key, value));
    else if (key == "image_size") cfg.image_size = static_cast<int>(parse_int(key, value));
    else if (key == "vicl") cfg.vicl_enabled = parse_bool(key, value);
    else if (key == "adain") cfg.adain = parse_bool(key, value);
    else if (key == "adain_before_forward") cfg.adain_before_forward = parse_bool(key, value);
    else if (key == "reuse_query_noise") cfg.reuse_query_noise = parse_bool(key, value);
    else if (key == "variant") cfg.variant = parse_variant(value);
    else {
      const bool ignored = std::any_of(ignored_prefixes.begin(), ignored_prefixes.end(),
                                       [&](const std::string& p) { return key.rfind(p, 0) == 0; });
      if (!ignored) throw ConfigError(key, "unknown configuration key");
    }
  }
}

KeyValues to_key_values(const VICLConfig& cfg) {
  auto num = [](double d) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), d);  // shortest exact round trip
    return std::string(buf, res.ptr);
  };
  std::string res;
  for (std::size_t i = 0; i < cfg.resolutions.size(); ++i) {
    res += (i ? "," : "") + std::to_string(cfg.resolutions[i]);
  }
  return {
      {"steps", std::to_string(cfg.steps)},
      {"tau", num(cfg.tau)},
      {"beta", num(cfg.beta)},
      {"gamma", num(cfg.gamma)},
      {"resolutions", res},
      {"ensemble", to_string(cfg.ensemble)},
      {"n_prompts", std::to_string(cfg.n_prompts)},
      {"seed", std::to_string(cfg.seed)},
      {"image_size", std::to_string(cfg.image_size)},
      {"vicl", cfg.vicl_enabled ? "true" : "false"},
      {"adain", cfg.adain ? "true" : "false"},
      {"adain_before_forward", cfg.adain_before_forward ? "true" : "false"},
      {"reuse_query_noise", cfg.reuse_query_noise ? "true" : "false"},
      {"variant", to_string(cfg.variant)},
  };
}

std::string format_key_values(const KeyValues& kv) {
  std::string out;
  for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
  return out;
}

}  // namespace sdvicl
