#include "onionnet/engine.hpp"

namespace onionnet {

const char* to_string(EventKind kind) {
    switch (kind) {
        case EventKind::ContactAttempt: return "ContactAttempt";
        case EventKind::PeerUpdateDue: return "PeerUpdateDue";
        case EventKind::CommandPush: return "CommandPush";
        case EventKind::AttackTick: return "AttackTick";
        case EventKind::FluxRotateDue: return "FluxRotateDue";
        case EventKind::SoapProbe: return "SoapProbe";
        case EventKind::DetectorSampleDue: return "DetectorSampleDue";
    }
    return "Unknown";
}

}  // namespace onionnet
