// Copyright 2026 The exrep Authors
// SPDX-License-Identifier: Apache-2.0

#include "exrep/error.hpp"

namespace exrep {

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInvalidSpec: return "InvalidSpec";
    case ErrorCode::kInvalidPlacement: return "InvalidPlacement";
    case ErrorCode::kInvalidInput: return "InvalidInput";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kSchemaError: return "SchemaError";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kMissingPopularity: return "MissingPopularity";
    case ErrorCode::kInvalidK: return "InvalidK";
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kInternal: return "InternalError";
  }
  return "Unknown";
}

}  // namespace exrep
