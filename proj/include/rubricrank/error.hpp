#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rubricrank {

enum class ErrorCode {
    EmptyField,
    InvalidArgument,
    MissingScoreTag,
    MalformedScore,
    OutOfRange,
    EmptyGroup,
    MissingWeights,
    AlphaOutOfRange,
    BackendUnreachable,
    BackendRejected,
    BackendTransient,
    AuthFailure,
    Timeout,
    AllSamplesFailed,
    QueryAborted,
    UnknownQuery,
    MismatchedQueries,
    ParseError,
    DanglingReference,
    UnknownDataset,
    IoError,
};

std::string_view to_string(ErrorCode code);

// Base exception for every failure surfaced by the library. The code is the
// stable identity; the message is for humans.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message);

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

// Thrown by parse_score. Keeps the offending completion for logging.
class ScoreParseError : public Error {
public:
    ScoreParseError(ErrorCode code, const std::string& message, std::string completion);

    const std::string& completion() const noexcept { return completion_; }

private:
    std::string completion_;
};

// Thrown by file loaders; line is 1-based, 0 when not applicable.
class ParseError : public Error {
public:
    ParseError(const std::string& path, std::size_t line, const std::string& what);

    const std::string& path() const noexcept { return path_; }
    std::size_t line() const noexcept { return line_; }

private:
    std::string path_;
    std::size_t line_;
};

}  // namespace rubricrank
