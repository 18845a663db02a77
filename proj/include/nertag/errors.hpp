#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace nertag {

// All recoverable failures carry a stable machine-readable code (e.g.
// "OverlappingSpans", "SchemaError") next to the human-readable message.
// The CLI prints the code in its JSON error line; tests match on it.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

}  // namespace nertag
