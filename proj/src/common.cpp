#include "turngrab/common.hpp"

namespace turngrab {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::MissingColumn: return "MissingColumn";
        case ErrorCode::NonMonotonicTime: return "NonMonotonicTime";
        case ErrorCode::NonNumericField: return "NonNumericField";
        case ErrorCode::AmbiguousMatch: return "AmbiguousMatch";
        case ErrorCode::EmptyInput: return "EmptyInput";
        case ErrorCode::TooFewFrames: return "TooFewFrames";
        case ErrorCode::NonConstantFrameRate: return "NonConstantFrameRate";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::UnknownLabel: return "UnknownLabel";
        case ErrorCode::EmptyBatch: return "EmptyBatch";
        case ErrorCode::SingleClass: return "SingleClass";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::NonFiniteActivation: return "NonFiniteActivation";
        case ErrorCode::EmptyDataset: return "EmptyDataset";
        case ErrorCode::DivergenceDetected: return "DivergenceDetected";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::NoQualifyingTurns: return "NoQualifyingTurns";
        case ErrorCode::ZeroTotalTime: return "ZeroTotalTime";
        case ErrorCode::CheckpointCorrupt: return "CheckpointCorrupt";
        case ErrorCode::NoUsableEvents: return "NoUsableEvents";
        case ErrorCode::InvalidBuffer: return "InvalidBuffer";
        case ErrorCode::Io: return "Io";
        case ErrorCode::FormatError: return "FormatError";
    }
    return "Unknown";
}

}  // namespace turngrab
