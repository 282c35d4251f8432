#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cell {

enum class ErrorKind {
  kEmptyPrompt,
  kInvalidPrompt,
  kIndexNotRemaining,
  kDuplicateSpan,
  kInvalidArgument,
  kNetwork,
  kAuth,
  kMalformedResponse,
  kConfig,
  kEmptyBatch,
};

std::string_view to_string(ErrorKind kind);

// Errors raised by a remote (or mock) service. A search that hits one of these
// stops and reports an error record instead of propagating.
bool is_client_error(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }
  // what() without the kind prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorKind kind_;
  std::string message_;
};

}  // namespace cell
