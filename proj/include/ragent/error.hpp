#pragma once

#include <stdexcept>
#include <string>

namespace ragent {

enum class ErrorCode {
    AllZeroInput,
    DegenerateSignal,
    OutOfRange,
    DegenerateSegment,
    InsufficientData,
    SingleClass,
    BadK,
    EmptyKB,
    EmptyNeighbors,
    BadRuleTable,
    Timeout,
    TransportError,
    RateLimited,
    AuthError,
    ParseError,
    VocabError,
    MultiLabelError,
    UnknownLabel,
    NoValidVotes,
    BlindProtocolViolation,
    IoError,
    FormatError,
    VersionError,
    LockError,
    EmptyDevSplit,
    SpecError,
    ConfigError,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code)
    {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace ragent
