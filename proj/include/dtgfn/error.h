// Copyright 2026 The dtgfn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dtgfn {

enum class ErrorCode {
  kInvalidArgument,
  kMissingFile,
  kMissingColumn,
  kUnparseableCell,
  kSingleClass,
  kEmptyDataset,
  kNonFinite,
  kDegenerateSplit,
  kEmptyPartition,
  kDepthExceeded,
  kNotFrontier,
  kTerminalState,
  kIllegalAction,
  kCapExceeded,
  kOutOfSupport,
  kConfigMismatch,
  kEmptyEnsemble,
  kParse,
};

std::string_view ErrorCodeName(ErrorCode code);

// Every failure raised by the library carries a code so callers (and the CLI
// exit-code mapping) can dispatch without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace dtgfn
