// Copyright 2026 The dtgfn Authors
// SPDX-License-Identifier: Apache-2.0

#include "dtgfn/error.h"

namespace dtgfn {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kMissingFile: return "MissingFile";
    case ErrorCode::kMissingColumn: return "MissingColumn";
    case ErrorCode::kUnparseableCell: return "UnparseableCell";
    case ErrorCode::kSingleClass: return "SingleClass";
    case ErrorCode::kEmptyDataset: return "EmptyDataset";
    case ErrorCode::kNonFinite: return "NonFinite";
    case ErrorCode::kDegenerateSplit: return "DegenerateSplit";
    case ErrorCode::kEmptyPartition: return "EmptyPartition";
    case ErrorCode::kDepthExceeded: return "DepthExceeded";
    case ErrorCode::kNotFrontier: return "NotFrontier";
    case ErrorCode::kTerminalState: return "TerminalState";
    case ErrorCode::kIllegalAction: return "IllegalAction";
    case ErrorCode::kCapExceeded: return "CapExceeded";
    case ErrorCode::kOutOfSupport: return "OutOfSupport";
    case ErrorCode::kConfigMismatch: return "ConfigMismatch";
    case ErrorCode::kEmptyEnsemble: return "EmptyEnsemble";
    case ErrorCode::kParse: return "Parse";
  }
  return "Unknown";
}

}  // namespace dtgfn
