#include "zoterag/error.hpp"

namespace zoterag {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidLibraryId: return "InvalidLibraryId";
    case ErrorCode::kAuthFailed: return "AuthFailed";
    case ErrorCode::kLibraryNotFound: return "LibraryNotFound";
    case ErrorCode::kTransport: return "Transport";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kDiskFull: return "DiskFull";
    case ErrorCode::kNotAPdf: return "NotAPdf";
    case ErrorCode::kExtractionFailed: return "ExtractionFailed";
    case ErrorCode::kEmptyDocument: return "EmptyDocument";
    case ErrorCode::kDuplicateDocument: return "DuplicateDocument";
    case ErrorCode::kInvalidParams: return "InvalidParams";
    case ErrorCode::kEmptyText: return "EmptyText";
    case ErrorCode::kProviderError: return "ProviderError";
    case ErrorCode::kDimMismatch: return "DimMismatch";
    case ErrorCode::kDuplicateId: return "DuplicateId";
    case ErrorCode::kFormatVersionMismatch: return "FormatVersionMismatch";
    case ErrorCode::kCorruptStore: return "CorruptStore";
    case ErrorCode::kEmptyQuestion: return "EmptyQuestion";
    case ErrorCode::kContextOverflow: return "ContextOverflow";
    case ErrorCode::kIndexStale: return "IndexStale";
    case ErrorCode::kNoIndex: return "NoIndex";
    case ErrorCode::kUnknownSession: return "UnknownSession";
    case ErrorCode::kBusy: return "Busy";
    case ErrorCode::kUnknownJob: return "UnknownJob";
  }
  return "Unknown";
}

}  // namespace zoterag
