// Copyright 2026 The sdvicl Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <set>
#include <string>

#include "sdvicl/attention/attention.hpp"
#include "sdvicl/core/archive.hpp"

namespace sdvicl {

/// Diagnostic hook that keeps selected attention maps of the modified
/// branch. Empty filter sets mean "everything".
class AttentionCapture {
 public:
  std::set<int> layer_filter;
  std::set<int> step_filter;
  std::set<int> head_filter;

  bool wants(const AttentionSite& site, int step) const {
    return (layer_filter.empty() || layer_filter.count(site.layer_index)) &&
           (step_filter.empty() || step_filter.count(step));
  }

  void record(const AttentionSite& site, int step, const AttentionMap& alpha);

  static std::string key(const AttentionSite& site, int step, int head);
  const TensorArchive& archive() const { return archive_; }
  std::size_t size() const { return archive_.tensors.size(); }
  void save(const std::string& path) const { archive_.save(path); }

 private:
  TensorArchive archive_;
};

}  // namespace sdvicl
