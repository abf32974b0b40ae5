// Copyright 2026 The sdvicl Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "sdvicl/core/error.hpp"

namespace sdvicl {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitIo = 3,
  kExitBackend = 4,
  kExitNumerical = 5,
};

int exit_code_for(ErrorKind kind);

/// Entry point of the `sdvicl` tool. Subcommands: predict, invert, retrieve,
/// bench, ablate, cache-embeddings. Every file it writes lands under --out-dir.
int run_cli(int argc, char** argv);

}  // namespace sdvicl
