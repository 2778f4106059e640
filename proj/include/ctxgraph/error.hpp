#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ctxgraph {

enum class ErrorCode {
    InvalidArgument,
    UncategorizableReading,
    MissingParameter,
    UnknownParameter,
    DuplicateContext,
    UnknownNode,
    UnknownAction,
    SelfTransition,
    BrokenChain,
    InconsistentLog,
    DuplicateRuleId,
    SchemaMismatch,
    NoPriorStep,
    FeedbackDisabled,
    StorageFailure,
    CorruptLog,
    CorruptGraphFile,
    IntegrityViolation,
    MalformedInput,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every fault raised by the library carries one of the codes above so the
/// CLI can map it onto an exit status without string matching.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// CorruptLog carries the 1-based line that failed.
class CorruptLogError : public Error {
public:
    CorruptLogError(std::size_t line, const std::string& what)
        : Error(ErrorCode::CorruptLog, "line " + std::to_string(line) + ": " + what),
          line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace ctxgraph
