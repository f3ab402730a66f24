// Copyright (C) 2026 The reenact authors
// SPDX-License-Identifier: Apache-2.0
//
#include <iostream>

#include "reenact/cli.hpp"

int main(int argc, char** argv) { return reenact::cli::run(argc, argv, std::cout, std::cerr); }
