#include "blocklot/errors.hpp"

namespace blocklot {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::InvalidParameter: return "InvalidParameter";
    case ErrorCode::MalformedRecord: return "MalformedRecord";
    case ErrorCode::AlreadyDrawn: return "AlreadyDrawn";
    case ErrorCode::PastDeadline: return "PastDeadline";
    case ErrorCode::DuplicateMember: return "DuplicateMember";
    case ErrorCode::TooManyWinners: return "TooManyWinners";
    case ErrorCode::EmptyEvent: return "EmptyEvent";
    case ErrorCode::NotDrawn: return "NotDrawn";
    case ErrorCode::BadToken: return "BadToken";
    case ErrorCode::TooEarly: return "TooEarly";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::BeaconUnavailable: return "BeaconUnavailable";
    case ErrorCode::MalformedResponse: return "MalformedResponse";
    case ErrorCode::BlockNotYetPublished: return "BlockNotYetPublished";
    case ErrorCode::ReplicationFailure: return "ReplicationFailure";
    case ErrorCode::KeyNotFound: return "KeyNotFound";
    case ErrorCode::NoMajority: return "NoMajority";
    case ErrorCode::InsufficientRuns: return "InsufficientRuns";
    }
    return "Unknown";
}

} // namespace blocklot
