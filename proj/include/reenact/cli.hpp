// Copyright (C) 2026 The reenact authors
// SPDX-License-Identifier: Apache-2.0
//
// facereenact command line: align, train, reenact, evaluate, synth.
//
#pragma once

#include <ostream>

namespace reenact::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kRuntime = 2 };

/// Parses and runs one invocation. Never throws; failures map to exit codes.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace reenact::cli
