// Copyright (C) 2026 The reenact authors
// SPDX-License-Identifier: Apache-2.0
//
// Named-tensor archive.
//
//   offset 0   8 bytes   magic "RNTARCH1"
//   offset 8   u64 LE    manifest length M
//   offset 16  M bytes   JSON manifest:
//                        {"tensors": [{"name", "dtype": "float64", "shape", "offset", "nbytes"}]}
//   16 + M     ...       tensor payloads, little-endian, offsets relative to here
//
// Tensors are written in name order, so equal maps give identical bytes.
//
#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "reenact/tensor.hpp"

namespace reenact {

using TensorMap = std::map<std::string, Tensor>;

void write_archive(const std::filesystem::path& path, const TensorMap& tensors);
TensorMap read_archive(const std::filesystem::path& path);

}  // namespace reenact
