// Copyright (C) 2026 The reenact authors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <stdexcept>
#include <string>

namespace reenact {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor or image dimensions disagree with what an operation expects.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Landmark geometry that admits no well-defined answer (coincident anchors,
/// zero inter-ocular distance, ...).
class DegenerateGeometryError : public Error {
 public:
  using Error::Error;
};

/// Invalid argument value (empty batch, non-finite input, bad config key).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// File parsing and filesystem failures.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Raised by the trainer when a loss term turns non-finite.
class TrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace reenact
