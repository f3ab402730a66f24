// Copyright (C) 2026 The reenact authors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <filesystem>
#include <span>

#include "reenact/tensor.hpp"

namespace reenact {

/// Reads an 8-bit PNG as a {3, H, W} tensor scaled to [-1, 1]. Gray and
/// alpha inputs are expanded or stripped to RGB.
Tensor read_png(const std::filesystem::path& path);

/// Writes a {3, H, W} (or {1, H, W}) tensor in [-1, 1] as 8-bit PNG; values
/// outside the range are clamped. Output bytes depend only on the tensor.
void write_png(const std::filesystem::path& path, const Tensor& image);

/// [-1, 1] <-> 8-bit conversions used by the PNG codec.
unsigned char to_byte(double v);
double from_byte(unsigned char b);

/// Places equally tall {C, H, W} images next to each other.
Tensor hconcat(std::span<const Tensor> images);

}  // namespace reenact
