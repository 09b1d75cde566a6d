#include "xoff/error.hpp"

namespace xoff {

std::string_view category_name(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::kUsage: return "usage";
    case ErrorCategory::kConfig: return "config";
    case ErrorCategory::kIngestion: return "ingestion";
    case ErrorCategory::kArgument: return "argument";
    case ErrorCategory::kDivergence: return "divergence";
    case ErrorCategory::kNumeric: return "numeric";
    case ErrorCategory::kCheckpoint: return "checkpoint";
    case ErrorCategory::kCollision: return "collision";
    case ErrorCategory::kNoRecords: return "no-records";
    case ErrorCategory::kIo: return "io";
    case ErrorCategory::kInternal: return "internal";
  }
  return "internal";
}

int exit_code(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::kUsage: return 2;
    case ErrorCategory::kConfig: return 3;
    case ErrorCategory::kIngestion: return 4;
    case ErrorCategory::kArgument: return 5;
    case ErrorCategory::kDivergence: return 6;
    case ErrorCategory::kNumeric: return 7;
    case ErrorCategory::kCheckpoint: return 8;
    case ErrorCategory::kCollision: return 9;
    case ErrorCategory::kNoRecords: return 10;
    case ErrorCategory::kIo: return 11;
    case ErrorCategory::kInternal: return 1;
  }
  return 1;
}

}  // namespace xoff
