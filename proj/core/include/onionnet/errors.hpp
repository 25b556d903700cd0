#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace onionnet {

// Base class for every error the simulator raises on purpose.
struct SimError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// engine
struct SchedulingInPastError : SimError {
    SchedulingInPastError(std::uint64_t event_time, std::uint64_t clock)
        : SimError("cannot schedule event at t=" + std::to_string(event_time) +
                   " when clock is at t=" + std::to_string(clock)) {}
};

// overlay
struct EmptyRelayListError : SimError {
    EmptyRelayListError() : SimError("circuit needs at least one relay") {}
};

struct DuplicateRelayError : SimError {
    explicit DuplicateRelayError(const std::string& what) : SimError(what) {}
};

struct TagVerificationError : SimError {
    TagVerificationError() : SimError("layer tag verification failed: wrong key") {}
};

struct RendezvousMismatchError : SimError {
    RendezvousMismatchError() : SimError("client and service circuits terminate at different relays") {}
};

// soap
struct HostNotInfectedError : SimError {
    HostNotInfectedError() : SimError("reverse engineering requires an infected host") {}
};

struct TargetUnknownError : SimError {
    explicit TargetUnknownError(const std::string& onion)
        : SimError("target " + onion + " has not been discovered") {}
};

// evasion
struct UnknownDomainError : SimError {
    explicit UnknownDomainError(const std::string& domain)
        : SimError("domain " + domain + " is not registered") {}
};

// scenario / metrics
struct ParseError : SimError {
    ParseError(int line_no, const std::string& message)
        : SimError("parse error at line " + std::to_string(line_no) + ": " + message),
          line(line_no) {}
    int line;
};

struct ValidationError : SimError {
    ValidationError(std::string field_name, std::string constraint_text)
        : SimError("invalid value for '" + field_name + "': must be " + constraint_text),
          field(std::move(field_name)),
          constraint(std::move(constraint_text)) {}
    std::string field;
    std::string constraint;
};

struct MalformedMetricsError : SimError {
    MalformedMetricsError(std::size_t offset, const std::string& message)
        : SimError("malformed metrics at byte " + std::to_string(offset) + ": " + message),
          byte_offset(offset) {}
    std::size_t byte_offset;
};

}  // namespace onionnet
