// Copyright 2026 The sdvicl Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <string>

#include "sdvicl/pipeline/pipeline.hpp"

namespace sdvicl {

/// JSON report of one episode: config echo, seed, backend, input hashes,
/// prompt ids, schedule and per-stage timings. Enough to rerun the episode.
std::string trace_json(const EpisodeTrace& trace, const std::map<std::string, std::string>& extra = {});

/// Writes `text` to `path` through a sibling temp file.
void write_text_atomic(const std::string& path, const std::string& text);

}  // namespace sdvicl
