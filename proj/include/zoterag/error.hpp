#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace zoterag {

enum class ErrorCode {
  kInvalidLibraryId,
  kAuthFailed,
  kLibraryNotFound,
  kTransport,
  kIoError,
  kDiskFull,
  kNotAPdf,
  kExtractionFailed,
  kEmptyDocument,
  kDuplicateDocument,
  kInvalidParams,
  kEmptyText,
  kProviderError,
  kDimMismatch,
  kDuplicateId,
  kFormatVersionMismatch,
  kCorruptStore,
  kEmptyQuestion,
  kContextOverflow,
  kIndexStale,
  kNoIndex,
  kUnknownSession,
  kBusy,
  kUnknownJob,
};

std::string_view to_string(ErrorCode code);

// Every failure surfaced by the library is an Error carrying a stable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace zoterag
