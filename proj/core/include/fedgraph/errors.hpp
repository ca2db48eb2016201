// Copyright 2026 The fedgraph Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fedgraph {

// Base of every error raised by the library. Callers that only need to
// distinguish "numeric divergence" from "everything else" can catch
// DivergedError first and Error second.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file. Carries the 1-based line number when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  explicit ParseError(const std::string& what) : Error(what) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_ = 0;
};

// Well-formed input that violates a domain invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Parameter vector/tensor does not match the expected ParamLayout.
class LayoutError : public Error {
 public:
  using Error::Error;
};

// Matrix or sequence dimensions disagree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration value or combination.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Non-finite values appeared during training or aggregation.
class DivergedError : public Error {
 public:
  using Error::Error;
};

// Checkpoint or manifest failed an integrity check.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

// A broken internal contract (e.g. a tape replayed against another model).
class InternalError : public Error {
 public:
  using Error::Error;
};

}  // namespace fedgraph
