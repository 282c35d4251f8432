#include "cell/error.hpp"

namespace cell {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kEmptyPrompt:
      return "EmptyPrompt";
    case ErrorKind::kInvalidPrompt:
      return "InvalidPrompt";
    case ErrorKind::kIndexNotRemaining:
      return "IndexNotRemaining";
    case ErrorKind::kDuplicateSpan:
      return "DuplicateSpan";
    case ErrorKind::kInvalidArgument:
      return "InvalidArgument";
    case ErrorKind::kNetwork:
      return "Network";
    case ErrorKind::kAuth:
      return "Auth";
    case ErrorKind::kMalformedResponse:
      return "MalformedResponse";
    case ErrorKind::kConfig:
      return "Config";
    case ErrorKind::kEmptyBatch:
      return "EmptyBatch";
  }
  return "Unknown";
}

bool is_client_error(ErrorKind kind) {
  return kind == ErrorKind::kNetwork || kind == ErrorKind::kAuth ||
         kind == ErrorKind::kMalformedResponse;
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message),
      kind_(kind),
      message_(message) {}

}  // namespace cell
