#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "onionnet/engine.hpp"
#include "onionnet/overlay.hpp"

namespace onionnet {

// Auditable record of a run. Protocol-level facts (state transitions,
// command deliveries/forwards/executions) are always recorded; they are
// small. Wire-level material (delivery traces, envelope bytes, payloads,
// peer-table snapshots, session joins) is recorded only when `capture` is
// on, and can additionally be streamed through `sink` so arbitrarily large
// runs can be scanned without buffering.
struct Transcript {
    bool capture = false;
    // Storage can be narrowed for big runs; the sink always sees everything.
    bool store_traces = true;
    bool store_wire = true;
    std::function<void(std::string_view)> sink;

    struct StateTransition {
        SimTime time;
        std::string onion;  // empty until the bot has an identity
        std::string from;
        std::string to;
    };
    std::vector<StateTransition> transitions;

    struct CommandDelivery {
        SimTime time;
        std::uint64_t command;
        std::string onion;
    };
    std::vector<CommandDelivery> deliveries;  // accepted deliveries only

    struct CommandForward {
        SimTime time;
        std::uint64_t command;
        std::string onion;
        std::uint32_t fanout;
    };
    std::vector<CommandForward> forwards;

    struct CommandExecution {
        SimTime time;
        std::uint64_t command;
        std::string onion;
    };
    std::vector<CommandExecution> executions;

    // Commands that reached defender-controlled actors and were dropped.
    struct AbsorbedCommand {
        SimTime time;
        std::uint64_t command;
        std::string onion;
    };
    std::vector<AbsorbedCommand> absorbed;

    // One entry per master push: the seed addresses targeted and, when
    // capture is on, the peer graph frozen at push time. Reachability
    // analysis replays floods from these.
    struct GraphNode {
        std::string onion;
        std::vector<std::string> peers;
        bool connected = false;  // bot in Waiting/Executing
        bool absorbing = false;  // defender actor: receives, never forwards
    };
    struct CommandPush {
        SimTime time;
        std::uint64_t command;
        std::vector<std::string> seeds;
        std::vector<GraphNode> graph;  // only populated under capture
    };
    std::vector<CommandPush> pushes;

    std::vector<overlay::DeliveryTrace> traces;
    std::vector<std::string> wire_lines;  // payloads, envelope hex, tables, sessions

    void state_transition(SimTime t, std::string onion, std::string from, std::string to) {
        transitions.push_back({t, std::move(onion), std::move(from), std::move(to)});
    }

    void command_delivery(SimTime t, std::uint64_t cmd, std::string onion) {
        deliveries.push_back({t, cmd, std::move(onion)});
    }

    void command_forward(SimTime t, std::uint64_t cmd, std::string onion, std::uint32_t fanout) {
        forwards.push_back({t, cmd, std::move(onion), fanout});
    }

    void command_execution(SimTime t, std::uint64_t cmd, std::string onion) {
        executions.push_back({t, cmd, std::move(onion)});
    }

    void command_absorbed(SimTime t, std::uint64_t cmd, std::string onion) {
        absorbed.push_back({t, cmd, std::move(onion)});
    }

    void record_trace(const overlay::DeliveryTrace& trace) {
        if (!capture && !sink) return;
        if (sink) sink(trace_line(trace));
        if (capture && store_traces) traces.push_back(trace);
    }

    void record_wire(std::string line) {
        if (!capture && !sink) return;
        if (sink) sink(line);
        if (capture && store_wire) wire_lines.push_back(std::move(line));
    }

    bool wire_enabled() const { return capture || static_cast<bool>(sink); }

    static std::string trace_line(const overlay::DeliveryTrace& trace);

    // Full textual dump of everything stored; substring scans run over this.
    std::string serialize() const;
};

}  // namespace onionnet
