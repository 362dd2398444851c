// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 reclens authors

#pragma once

#include <stdexcept>
#include <string>

namespace reclens {

// Bad or contradictory configuration. The CLI maps this to exit code 1.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// A stage was asked to run before the artifact it consumes exists, or the
// artifact fails its fingerprint check. CLI exit code 2.
struct PrerequisiteError : std::runtime_error {
  explicit PrerequisiteError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input data (bad line in an interaction log, bad checkpoint, ...).
struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

// Training produced a non-finite loss.
struct DivergenceError : std::runtime_error {
  explicit DivergenceError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace reclens
