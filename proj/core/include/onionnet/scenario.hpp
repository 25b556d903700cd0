#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "onionnet/engine.hpp"

namespace onionnet::scenario {

enum class Transport { Onion, DnsFlux };

// Flat `key = value` scenario format with `#` comments and dotted keys for
// groups. Every field has a default; README documents them all.
struct ScenarioConfig {
    std::string name = "unnamed";
    std::uint64_t seed = 1;
    SimTime horizon = 1000;
    std::uint32_t population = 50;
    std::uint32_t initial_infected = 3;
    Transport transport = Transport::Onion;

    double beta = 0.05;              // infection probability per contact
    std::uint32_t contact_rate = 1;  // contacts per infected bot per tick
    SimTime infection_stop_tick = 0; // 0 = never stop

    std::uint32_t peer_capacity = 8;   // k
    SimTime update_period = 60;        // T_p
    std::uint32_t circuit_length = 3;
    std::uint32_t relays = 40;
    SimTime latency_min = 0;
    SimTime latency_max = 0;
    std::uint32_t bootstrap_retry_budget = 1;
    std::uint32_t bootstrap_list_size = 8;
    SimTime bootstrap_refresh_interval = 0;  // 0 = shipped list never replaced

    struct Soap {
        bool enabled = false;
        std::uint32_t honeypots = 2;
        double p_detect = 0.1;
        std::uint32_t sybils_per_target = 8;
        SimTime ping_interval = 15;
        SimTime check_interval = 60;
        SimTime start_tick = 0;
        bool stop_infections = false;  // freeze the epidemic when the defense starts
        bool sybil_gossip = false;     // sybils advertise their clone group
    } soap;

    struct Commands {
        std::uint32_t count = 0;
        SimTime first_tick = 0;
        SimTime interval = 0;
        std::string kind = "ddos";  // ddos | spam
        std::string target = "target-0";
        std::uint32_t rate = 5;
        SimTime duration = 10;
        std::uint32_t spam_volume = 100;
        SimTime spam_window = 10;
        std::uint32_t seeds = 3;
    } command;

    struct Dga {
        std::uint64_t seed = 1337;
        std::uint32_t domains_per_period = 16;
        std::uint32_t label_length = 12;
        std::string tlds = ".com,.net,.biz";
        SimTime period_length = 500;
        std::uint32_t registered_per_period = 2;
    } dga;

    struct Flux {
        std::uint32_t ip_pool_size = 1000;
        std::uint32_t ips_per_record = 3;
        SimTime rotation_period = 50;
        SimTime ttl = 120;
    } flux;

    struct Beacon {
        SimTime period = 20;
        std::uint64_t bytes = 256;
        SimTime jitter_ticks = 0;
        std::uint64_t jitter_bytes = 0;
    } beacon;

    struct Benign {
        double flow_rate = 0.05;  // per susceptible host per tick
        std::uint64_t bytes_min = 50;
        std::uint64_t bytes_max = 5000;
        std::uint32_t destinations = 50;
    } benign;

    struct Detector {
        SimTime window = 200;
        double theta_cv = 0.35;
        double theta_var = 5000.0;
        std::uint32_t min_windows = 3;
    } detector;

    struct Blocklist {
        bool enabled = false;
        std::uint64_t recovered_seed = 0;  // 0 = use dga.seed (perfect recovery)
        SimTime activation_delay = 0;
        std::string file;  // extra newline-delimited domains, always applied
    } blocklist;

    std::string flows_export;  // write the flow corpus as CSV after the run
    std::string output;

    std::vector<std::string> tld_list() const;
    std::uint64_t effective_recovered_seed() const {
        return blocklist.recovered_seed == 0 ? dga.seed : blocklist.recovered_seed;
    }

    // Throws ValidationError naming field and constraint.
    void validate() const;
};

// Throws ParseError (unknown key, bad syntax, bad value) or ValidationError.
ScenarioConfig parse_scenario(const std::string& text);
ScenarioConfig load_scenario(const std::string& path);  // file must exist

}  // namespace onionnet::scenario
