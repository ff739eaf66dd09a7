#include "thzq/error.hpp"

namespace thzq {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::ZeroNormWaveform: return "ZeroNormWaveform";
    case ErrorCode::LengthExceedsRegister: return "LengthExceedsRegister";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::SameQubit: return "SameQubit";
    case ErrorCode::OddQubitCount: return "OddQubitCount";
    case ErrorCode::NonPositiveLayers: return "NonPositiveLayers";
    case ErrorCode::FeatureLenExceedsRegister: return "FeatureLenExceedsRegister";
    case ErrorCode::InvalidDims: return "InvalidDims";
    case ErrorCode::BatchTooSmall: return "BatchTooSmall";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::StaleCache: return "StaleCache";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::OutOfRangePixel: return "OutOfRangePixel";
    case ErrorCode::EmptySplit: return "EmptySplit";
    case ErrorCode::DegenerateClass: return "DegenerateClass";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    }
    return "Unknown";
}

} // namespace thzq
