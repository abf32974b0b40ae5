// Copyright 2026 The sdvicl Authors.
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>

#include "sdvicl/attention/attention.hpp"
#include "sdvicl/attention/capture.hpp"

namespace sdvicl {

std::vector<AttentionSite> select_sites(std::span<const AttentionSite> all_sites, std::span<const int> resolutions) {
  std::vector<AttentionSite> out;
  for (const auto& s : all_sites) {
    if (!s.decoder) continue;
    if (std::find(resolutions.begin(), resolutions.end(), s.resolution) == resolutions.end()) continue;
    out.push_back(s);
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const AttentionSite& a, const AttentionSite& b) { return a.layer_index < b.layer_index; });
  return out;
}

std::string AttentionCapture::key(const AttentionSite& site, int step, int head) {
  return site.name() + "/step" + std::to_string(step) + "/head" + std::to_string(head);
}

void AttentionCapture::record(const AttentionSite& site, int step, const AttentionMap& alpha) {
  if (!wants(site, step)) return;
  for (int h = 0; h < alpha.num_heads(); ++h) {
    if (!head_filter.empty() && !head_filter.count(h)) continue;
    archive_.put(key(site, step, h), alpha.heads[h]);
  }
}

}  // namespace sdvicl
