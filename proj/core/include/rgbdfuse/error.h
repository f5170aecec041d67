#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rgbdfuse {

enum class ErrorCode {
  kInvalidArgument,
  kAllMissing,
  kValueOutOfRange,
  kOutOfBounds,
  kFrameTooSmall,
  kSizeMismatch,
  kInsufficientGroups,
  kEmptyLibrary,
  kShapeMismatch,
  kNotPretrained,
  kConfig,
  kTooFewInstances,
  kEmptyTestSet,
  kIo,
  kFormat,
};

std::string_view ErrorCodeName(ErrorCode code);

// Every failure raised by the library carries one of the codes above so
// callers (and the CLI's exit-code mapping) can dispatch without parsing text.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace rgbdfuse
