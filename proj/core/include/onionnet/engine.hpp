#pragma once

#include <cstdint>
#include <functional>
#include <queue>
#include <variant>
#include <vector>

#include "onionnet/errors.hpp"
#include "onionnet/rng.hpp"

namespace onionnet {

// Virtual clock. One tick models one abstract second.
using SimTime = std::uint64_t;

enum class EventKind {
    ContactAttempt,    // infection sweep or a dns-flux bot beaconing its master
    PeerUpdateDue,     // a bot's periodic bootstrap/peer-table refresh
    CommandPush,       // the botmaster issues a command
    AttackTick,        // one tick of an executing attack task
    FluxRotateDue,     // fast-flux A-record rotation
    SoapProbe,         // defender loop: sybil pings, discovery, partition checks
    DetectorSampleDue  // flow-feature extraction window boundary
};

const char* to_string(EventKind kind);

// Kind-specific payloads. Kept small; the subject field carries the node.
struct InfectionSweep {};
struct C2Beacon {};
struct CommandDue {
    std::uint64_t command_seq = 0;
};
struct AttackBurst {
    std::uint64_t command_id = 0;
    std::uint32_t events = 0;
    bool final_tick = false;
};
using EventPayload = std::variant<std::monostate, InfectionSweep, C2Beacon, CommandDue, AttackBurst>;

struct Event {
    SimTime time = 0;
    std::uint64_t seq = 0;  // insertion order, unique per run
    EventKind kind = EventKind::ContactAttempt;
    std::uint32_t subject = 0;
    EventPayload payload{};
};

// Deterministic discrete-event loop. Events dispatch in (time, seq) order;
// ties at the same tick resolve by insertion order, so cascades scheduled
// during a dispatch run after everything already due at that tick.
class Engine {
public:
    using Handler = std::function<void(const Event&)>;
    using TickHook = std::function<void(SimTime)>;

    explicit Engine(std::uint64_t seed) : rng_(seed) {}

    SimTime now() const { return clock_; }
    Rng& rng() { return rng_; }
    std::size_t pending() const { return queue_.size(); }

    void set_handler(Handler handler) { handler_ = std::move(handler); }

    // Called once at the end of every tick processed by run_until.
    void set_tick_hook(TickHook hook) { tick_hook_ = std::move(hook); }

    void schedule(SimTime time, EventKind kind, std::uint32_t subject = 0, EventPayload payload = {}) {
        if (time < clock_) throw SchedulingInPastError(time, clock_);
        queue_.push(Event{time, next_seq_++, kind, subject, std::move(payload)});
    }

    // Dispatches every event with time <= horizon and leaves the clock there.
    // An empty queue simply advances the clock.
    void run_until(SimTime horizon) {
        while (true) {
            while (!queue_.empty() && queue_.top().time == clock_) {
                Event ev = queue_.top();
                queue_.pop();
                if (handler_) handler_(ev);
            }
            if (tick_hook_) tick_hook_(clock_);
            if (clock_ >= horizon) break;
            ++clock_;
        }
    }

private:
    struct LaterFirst {
        bool operator()(const Event& a, const Event& b) const {
            if (a.time != b.time) return a.time > b.time;
            return a.seq > b.seq;
        }
    };

    SimTime clock_ = 0;
    std::uint64_t next_seq_ = 0;
    Rng rng_;
    Handler handler_;
    TickHook tick_hook_;
    std::priority_queue<Event, std::vector<Event>, LaterFirst> queue_;
};

}  // namespace onionnet
