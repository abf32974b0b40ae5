// Copyright 2026 The sdvicl Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

namespace sdvicl {

enum class TaskKind {
  kForegroundSegmentation,
  kSingleObjectDetection,
  kSemanticSegmentation,
  kKeypointDetection,
  kEdgeDetection,
  kColorization,
};

const char* to_string(TaskKind task);

/// Accepts the to_string names: fgseg, detection, semseg, keypoints, edges, colorization.
TaskKind parse_task(const std::string& text);

}  // namespace sdvicl
