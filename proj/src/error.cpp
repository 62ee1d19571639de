#include "ragent/error.hpp"

namespace ragent {

const char* to_string(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::AllZeroInput: return "AllZeroInput";
    case ErrorCode::DegenerateSignal: return "DegenerateSignal";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::DegenerateSegment: return "DegenerateSegment";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::BadK: return "BadK";
    case ErrorCode::EmptyKB: return "EmptyKB";
    case ErrorCode::EmptyNeighbors: return "EmptyNeighbors";
    case ErrorCode::BadRuleTable: return "BadRuleTable";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::TransportError: return "TransportError";
    case ErrorCode::RateLimited: return "RateLimited";
    case ErrorCode::AuthError: return "AuthError";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::VocabError: return "VocabError";
    case ErrorCode::MultiLabelError: return "MultiLabelError";
    case ErrorCode::UnknownLabel: return "UnknownLabel";
    case ErrorCode::NoValidVotes: return "NoValidVotes";
    case ErrorCode::BlindProtocolViolation: return "BlindProtocolViolation";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::FormatError: return "FormatError";
    case ErrorCode::VersionError: return "VersionError";
    case ErrorCode::LockError: return "LockError";
    case ErrorCode::EmptyDevSplit: return "EmptyDevSplit";
    case ErrorCode::SpecError: return "SpecError";
    case ErrorCode::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

}  // namespace ragent
