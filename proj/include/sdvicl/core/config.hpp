// Copyright 2026 The sdvicl Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace sdvicl {

enum class EnsembleMode { kIwpe, kFeatureEnsemble };

/// Which paths feed the query/key of the recomputed attention.
/// The value always comes from the prompt target.
enum class AttentionVariant {
  kQueryC_KeyA,  // proposed
  kQueryD_KeyB,
  kQueryC_KeyB,
  kQueryD_KeyA,
};

struct VICLConfig {
  int steps = 70;
  double tau = 0.4;
  double beta = 1.67;
  double gamma = 3.5;
  std::vector<int> resolutions = {16, 32, 64};
  EnsembleMode ensemble = EnsembleMode::kIwpe;
  int n_prompts = 1;
  std::uint64_t seed = 0;

  // Artifact switches (ablations). Defaults reproduce the main method.
  int image_size = 512;
  bool vicl_enabled = true;         // false: D replays C untouched
  bool adain = true;
  bool adain_before_forward = true;
  bool reuse_query_noise = true;    // D consumes C's per-step noise maps
  AttentionVariant variant = AttentionVariant::kQueryC_KeyA;

  friend bool operator==(const VICLConfig&, const VICLConfig&) = default;
};

/// Returns cfg with resolutions sorted and de-duplicated, or throws
/// ConfigError naming the first invalid field.
VICLConfig validate_config(VICLConfig cfg);

const char* to_string(EnsembleMode mode);
const char* to_string(AttentionVariant variant);
EnsembleMode parse_ensemble(const std::string& text);
AttentionVariant parse_variant(const std::string& text);

/// Flat key/value pairs, `key = value` per line, `#` comments.
using KeyValues = std::map<std::string, std::string>;

KeyValues read_key_values(const std::string& path);
KeyValues parse_key_values(const std::string& text);

/// Applies recognized keys onto cfg. Unknown keys are a ConfigError.
/// `ignored_prefixes` lets other subsystems (dataset roots, ...) share the file.
void apply_key_values(VICLConfig& cfg, const KeyValues& kv,
                      const std::vector<std::string>& ignored_prefixes = {"data.", "bench."});

/// Inverse of apply_key_values, used for config echo in reports.
KeyValues to_key_values(const VICLConfig& cfg);

std::string format_key_values(const KeyValues& kv);

}  // namespace sdvicl
