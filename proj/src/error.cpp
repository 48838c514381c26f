#include "rubricrank/error.hpp"

namespace rubricrank {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::EmptyField:          return "EmptyField";
        case ErrorCode::InvalidArgument:     return "InvalidArgument";
        case ErrorCode::MissingScoreTag:     return "MissingScoreTag";
        case ErrorCode::MalformedScore:      return "MalformedScore";
        case ErrorCode::OutOfRange:          return "OutOfRange";
        case ErrorCode::EmptyGroup:          return "EmptyGroup";
        case ErrorCode::MissingWeights:      return "MissingWeights";
        case ErrorCode::AlphaOutOfRange:     return "AlphaOutOfRange";
        case ErrorCode::BackendUnreachable:  return "BackendUnreachable";
        case ErrorCode::BackendRejected:     return "BackendRejected";
        case ErrorCode::BackendTransient:    return "BackendTransient";
        case ErrorCode::AuthFailure:         return "AuthFailure";
        case ErrorCode::Timeout:             return "Timeout";
        case ErrorCode::AllSamplesFailed:    return "AllSamplesFailed";
        case ErrorCode::QueryAborted:        return "QueryAborted";
        case ErrorCode::UnknownQuery:        return "UnknownQuery";
        case ErrorCode::MismatchedQueries:   return "MismatchedQueries";
        case ErrorCode::ParseError:          return "ParseError";
        case ErrorCode::DanglingReference:   return "DanglingReference";
        case ErrorCode::UnknownDataset:      return "UnknownDataset";
        case ErrorCode::IoError:             return "IoError";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

ScoreParseError::ScoreParseError(ErrorCode code, const std::string& message,
                                 std::string completion)
    : Error(code, message), completion_(std::move(completion)) {}

ParseError::ParseError(const std::string& path, std::size_t line, const std::string& what)
    : Error(ErrorCode::ParseError,
            path + (line > 0 ? ":" + std::to_string(line) : std::string()) + ": " + what),
      path_(path),
      line_(line) {}

}  // namespace rubricrank
