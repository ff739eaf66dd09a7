#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace thzq {

enum class ErrorCode {
    ZeroNormWaveform,
    LengthExceedsRegister,
    IndexOutOfRange,
    SameQubit,
    OddQubitCount,
    NonPositiveLayers,
    FeatureLenExceedsRegister,
    InvalidDims,
    BatchTooSmall,
    ShapeMismatch,
    StaleCache,
    InvalidConfig,
    OutOfRangePixel,
    EmptySplit,
    DegenerateClass,
    IoFailure,
    BadMagic,
    UnsupportedVersion,
    TruncatedFile,
    SchemaMismatch,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string &what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what),
          code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

  private:
    ErrorCode code_;
};

} // namespace thzq
