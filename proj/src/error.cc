// Copyright (c) 2026 The autokws Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "autokws/error.h"

namespace autokws {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kFormat: return "FormatError";
    case ErrorCode::kRateMismatch: return "RateMismatch";
    case ErrorCode::kInvalidScale: return "InvalidScale";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kTooShort: return "TooShort";
    case ErrorCode::kDimMismatch: return "DimMismatch";
    case ErrorCode::kEmptySequence: return "EmptySequence";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kWindowTooSmall: return "WindowTooSmall";
    case ErrorCode::kTooLarge: return "TooLarge";
    case ErrorCode::kSilentSignal: return "SilentSignal";
    case ErrorCode::kSilentNoise: return "SilentNoise";
    case ErrorCode::kSilentRir: return "SilentRir";
    case ErrorCode::kLayout: return "LayoutError";
    case ErrorCode::kSystemCrashed: return "SystemCrashed";
    case ErrorCode::kParse: return "ParseError";
    case ErrorCode::kDuplicateUtt: return "DuplicateUtt";
    case ErrorCode::kUnknownUttId: return "UnknownUttId";
    case ErrorCode::kZeroDuration: return "ZeroDuration";
    case ErrorCode::kBudgetExceeded: return "BudgetExceeded";
  }
  return "Error";
}

}  // namespace autokws
