#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace blocklot {

enum class ErrorCode {
    InvalidParameter,
    MalformedRecord,
    AlreadyDrawn,
    PastDeadline,
    DuplicateMember,
    TooManyWinners,
    EmptyEvent,
    NotDrawn,
    BadToken,
    TooEarly,
    NotFound,
    BeaconUnavailable,
    MalformedResponse,
    BlockNotYetPublished,
    ReplicationFailure,
    KeyNotFound,
    NoMajority,
    InsufficientRuns,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace blocklot
