#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "onionnet/botnet.hpp"

namespace onionnet::soap {

using botnet::Swarm;
using overlay::NodeId;
using overlay::OnionAddress;

struct Policy {
    std::uint32_t sybils_per_target = 8;
    SimTime ping_interval = 15;    // sybils re-peer this often
    SimTime check_interval = 60;   // discovery probes and honeypot harvests
    std::uint32_t honeypot_count = 2;
    double p_detect = 0.1;         // reverse-engineering success probability per probe
    SimTime start_tick = 0;
};

struct SybilNode {
    NodeId node;
    OnionAddress onion;
    OnionAddress target;     // the bot this clone crowds out
    std::uint32_t actor;     // swarm actor index
};

struct NeutralizationReport {
    std::uint32_t discovered = 0;
    std::uint32_t neutralized = 0;
    std::uint32_t sybils_active = 0;
    double neutralized_fraction = 0.0;  // of ever-infected bots
};

// Sybil-partition procedure: learn bot onion addresses (honeypots and
// reverse-engineering probes), surround each discovered bot with clones
// that out-peer its honest neighbors, and declare it neutralized once its
// whole table is defender-controlled.
class Defender {
public:
    Defender(Swarm& swarm, Rng& rng, Policy policy);

    // A defender host joins the botnet like any bot and records every
    // address the protocol legitimately shows it.
    std::uint32_t plant_honeypot(SimTime now);

    // With probability p_detect, yields the host's onion address and folds
    // it plus the host's current peer table into the discovered set.
    // Throws HostNotInfected for hosts that carry no bot.
    std::optional<OnionAddress> reverse_engineer(std::uint32_t host, SimTime now);

    // n fresh clones peering with `target` from now on. Throws TargetUnknown
    // when target was never discovered; n must be at least 1.
    std::vector<SybilNode> spawn_sybils(const OnionAddress& target, std::uint32_t n, SimTime now);

    // True iff the target's table is non-empty and every entry is a sybil.
    // A true result marks the bot Neutralized (absorbing).
    bool check_partitioned(const OnionAddress& target, SimTime now);

    // One round of the continuous loop: sybil volleys + partition checks on
    // every active group, periodic discovery, sybil spawning for fresh
    // targets, honeypot harvesting.
    void step(SimTime now);

    const std::set<OnionAddress>& discovered() const { return discovered_; }
    const std::set<OnionAddress>& neutralized() const { return neutralized_; }
    std::uint32_t sybils_active() const { return sybils_active_; }
    const std::vector<std::uint32_t>& honeypots() const { return honeypots_; }

    NeutralizationReport report() const;

private:
    void discover(const OnionAddress& onion);
    void harvest_honeypots();
    bool is_defender_onion(const OnionAddress& onion) const;

    Swarm& swarm_;
    Rng& rng_;
    Policy policy_;

    std::set<OnionAddress> discovered_;
    std::set<OnionAddress> neutralized_;
    std::map<OnionAddress, std::vector<SybilNode>> sybils_;
    std::vector<std::uint32_t> honeypots_;
    std::uint32_t sybils_active_ = 0;
    std::optional<SimTime> last_discovery_;
};

}  // namespace onionnet::soap
