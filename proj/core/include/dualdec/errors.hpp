#pragma once

#include <stdexcept>
#include <string>

namespace dualdec {

/// Coarse failure category. The CLI maps each one onto a process exit code.
enum class ErrorCategory {
  kInput = 2,     // unreadable, malformed or insufficient inputs
  kNumeric = 3,   // NaN/Inf produced during a computation
  kMismatch = 4,  // artifact incompatible with the requested operation
};

/// Base class of every error thrown by the library. `kind()` is a stable
/// identifier such as "OverlapError" that tools print verbatim.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, ErrorCategory category, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)), category_(category) {}

  const std::string& kind() const noexcept { return kind_; }
  ErrorCategory category() const noexcept { return category_; }

 private:
  std::string kind_;
  ErrorCategory category_;
};

#define DUALDEC_DEFINE_ERROR(Name, Category)                 \
  class Name : public Error {                                \
   public:                                                   \
    explicit Name(const std::string& message)                \
        : Error(#Name, ErrorCategory::Category, message) {}  \
  };

DUALDEC_DEFINE_ERROR(IoError, kInput)
DUALDEC_DEFINE_ERROR(FormatError, kInput)
DUALDEC_DEFINE_ERROR(ConfigError, kInput)
DUALDEC_DEFINE_ERROR(OverlapError, kInput)
DUALDEC_DEFINE_ERROR(EmptyLexiconError, kInput)
DUALDEC_DEFINE_ERROR(InsufficientDataError, kInput)
DUALDEC_DEFINE_ERROR(EmptyInputError, kInput)
DUALDEC_DEFINE_ERROR(EmptyResponseError, kInput)
DUALDEC_DEFINE_ERROR(LengthError, kInput)
DUALDEC_DEFINE_ERROR(IndexError, kInput)
DUALDEC_DEFINE_ERROR(ShapeError, kInput)
DUALDEC_DEFINE_ERROR(ZeroDenominatorError, kInput)
DUALDEC_DEFINE_ERROR(NonFiniteError, kNumeric)
DUALDEC_DEFINE_ERROR(ModelMismatchError, kMismatch)

#undef DUALDEC_DEFINE_ERROR

}  // namespace dualdec
