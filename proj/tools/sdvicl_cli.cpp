// Copyright 2026 The sdvicl Authors.
// SPDX-License-Identifier: Apache-2.0

#include "sdvicl/cli/cli.hpp"

int main(int argc, char** argv) { return sdvicl::run_cli(argc, argv); }
