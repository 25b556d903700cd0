#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "onionnet/engine.hpp"

namespace onionnet::scenario {

// One JSONL row per tick. Field order in the serialized form is exactly the
// declaration order here; see README for the schema.
struct TickRow {
    SimTime tick = 0;
    std::uint32_t susceptible = 0;
    std::uint32_t rally = 0;
    std::uint32_t waiting = 0;
    std::uint32_t executing = 0;
    std::uint32_t neutralized = 0;
    std::uint64_t commands_issued = 0;      // cumulative
    std::uint64_t command_deliveries = 0;   // cumulative accepted deliveries
    std::uint64_t attack_events = 0;        // cumulative
    std::uint32_t discovered = 0;
    std::uint32_t sybils_active = 0;
    std::optional<double> detector_precision;
    std::optional<double> detector_recall;

    std::uint32_t infected() const { return rally + waiting + executing; }
    std::uint32_t population_total() const {
        return susceptible + rally + waiting + executing + neutralized;
    }
};

struct Summary {
    std::string name;
    std::uint64_t seed = 0;
    SimTime horizon = 0;
    std::uint32_t population = 0;
    TickRow final_row;
    std::optional<SimTime> time_to_half_infected;
    std::optional<SimTime> time_to_ninety_infected;
    std::optional<SimTime> time_to_half_neutralized;
    std::optional<SimTime> time_to_full_neutralized;
    double neutralized_fraction = 0.0;  // of ever-infected bots at horizon
};

struct RunMetrics {
    std::vector<TickRow> rows;
    Summary summary;

    // One JSON object per tick, then one {"summary": ...} object. Stable
    // key order and number formatting, so equal runs give equal bytes.
    std::string to_jsonl() const;

    // Throws MalformedMetrics with the byte offset of the offending line.
    static RunMetrics from_jsonl(const std::string& text);

    // Derives the milestone fields of `summary` from `rows`.
    void finalize_summary();
};

}  // namespace onionnet::scenario
