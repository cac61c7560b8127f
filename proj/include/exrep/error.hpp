// Copyright 2026 The exrep Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace exrep {

enum class ErrorCode {
  kInvalidSpec,
  kInvalidPlacement,
  kInvalidInput,
  kShapeMismatch,
  kParseError,
  kSchemaError,
  kInvalidConfig,
  kMissingPopularity,
  kInvalidK,
  kIo,
  kInternal,
};

const char* error_code_name(ErrorCode code) noexcept;

// Single exception type for the library; the code says which contract failed.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace exrep
