#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace icr {

/// Every failure the engine can report. Callers switch on the code; the
/// message carries the human-readable detail.
enum class ErrorCode {
    // prompt layout
    EmptyCandidateSet,
    DuplicateDocumentId,
    InvalidDocument,
    InvalidQuery,
    TokenizerOffsetMismatch,
    NonContiguousSpan,
    PrefixDivergence,
    // scoring
    RowCoverageMismatch,
    ShapeMismatch,
    SpanMismatch,
    EmptySpan,
    MissingRetrieverRank,
    // toy backend
    InvalidConfig,
    ContextOverflow,
    UnknownTargetDoc,
    // attention dumps
    BadMagic,
    UnsupportedVersion,
    UnsupportedDtype,
    TruncatedHeader,
    TruncatedBody,
    NonAscendingRows,
    RowOutOfRange,
    TrailingBytes,
    IoFailure,
    MissingQueryDump,
    MissingCalibrationDump,
    // evaluation
    UnknownQuery,
    InvalidCutoff,
    MalformedRanking,
    FormatError,
    EmptyInput,
    // complexity
    InvalidWindowParams,
    UnknownMethod,
    BackendUnavailable,
    AcquisitionCountMismatch,
};

inline constexpr std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::EmptyCandidateSet: return "EmptyCandidateSet";
        case ErrorCode::DuplicateDocumentId: return "DuplicateDocumentId";
        case ErrorCode::InvalidDocument: return "InvalidDocument";
        case ErrorCode::InvalidQuery: return "InvalidQuery";
        case ErrorCode::TokenizerOffsetMismatch: return "TokenizerOffsetMismatch";
        case ErrorCode::NonContiguousSpan: return "NonContiguousSpan";
        case ErrorCode::PrefixDivergence: return "PrefixDivergence";
        case ErrorCode::RowCoverageMismatch: return "RowCoverageMismatch";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::SpanMismatch: return "SpanMismatch";
        case ErrorCode::EmptySpan: return "EmptySpan";
        case ErrorCode::MissingRetrieverRank: return "MissingRetrieverRank";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::ContextOverflow: return "ContextOverflow";
        case ErrorCode::UnknownTargetDoc: return "UnknownTargetDoc";
        case ErrorCode::BadMagic: return "BadMagic";
        case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
        case ErrorCode::UnsupportedDtype: return "UnsupportedDtype";
        case ErrorCode::TruncatedHeader: return "TruncatedHeader";
        case ErrorCode::TruncatedBody: return "TruncatedBody";
        case ErrorCode::NonAscendingRows: return "NonAscendingRows";
        case ErrorCode::RowOutOfRange: return "RowOutOfRange";
        case ErrorCode::TrailingBytes: return "TrailingBytes";
        case ErrorCode::IoFailure: return "IoFailure";
        case ErrorCode::MissingQueryDump: return "MissingQueryDump";
        case ErrorCode::MissingCalibrationDump: return "MissingCalibrationDump";
        case ErrorCode::UnknownQuery: return "UnknownQuery";
        case ErrorCode::InvalidCutoff: return "InvalidCutoff";
        case ErrorCode::MalformedRanking: return "MalformedRanking";
        case ErrorCode::FormatError: return "FormatError";
        case ErrorCode::EmptyInput: return "EmptyInput";
        case ErrorCode::InvalidWindowParams: return "InvalidWindowParams";
        case ErrorCode::UnknownMethod: return "UnknownMethod";
        case ErrorCode::BackendUnavailable: return "BackendUnavailable";
        case ErrorCode::AcquisitionCountMismatch: return "AcquisitionCountMismatch";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& detail)
        : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& detail) {
    throw Error(code, detail);
}

}  // namespace icr
