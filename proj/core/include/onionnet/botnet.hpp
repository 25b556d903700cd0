#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "onionnet/engine.hpp"
#include "onionnet/overlay.hpp"
#include "onionnet/transcript.hpp"

namespace onionnet::botnet {

using overlay::NodeId;
using overlay::OnionAddress;

// Lifecycle: Susceptible -> Rally -> Waiting <-> Executing, any infected
// state -> Neutralized (absorbing). Waiting -> Rally is the orphan fallback:
// a bot whose peer table empties re-enters Rally and re-bootstraps.
enum class Phase { Susceptible, Rally, Waiting, Executing, Neutralized };

const char* to_string(Phase phase);
bool legal_transition(Phase from, Phase to);

// Onion addresses only, most-recently-confirmed first, never the owner's
// own address, bounded by the capacity k.
class PeerTable {
public:
    explicit PeerTable(std::size_t capacity = 8) : capacity_(capacity) {}

    // Moves (or inserts) the address to the most-recent slot and trims to k.
    void confirm(const OnionAddress& peer, const OnionAddress& self);
    void drop(const OnionAddress& peer);
    bool contains(const OnionAddress& peer) const;

    bool empty() const { return entries_.empty(); }
    std::size_t size() const { return entries_.size(); }
    std::size_t capacity() const { return capacity_; }
    void set_capacity(std::size_t k) { capacity_ = k; }
    const std::vector<OnionAddress>& entries() const { return entries_; }

private:
    std::vector<OnionAddress> entries_;
    std::size_t capacity_;
};

struct DdosTask {
    std::string target;
    std::uint32_t rate = 0;     // requests per tick
    SimTime duration = 0;       // ticks
};

struct SpamTask {
    std::uint32_t volume = 0;   // messages, spread uniformly over `window`
    SimTime window = 10;
};

struct Command {
    std::uint64_t id = 0;
    std::variant<DdosTask, SpamTask> task;
    SimTime issued_at = 0;
    std::uint64_t signature = 0;

    Bytes canonical_bytes() const;
    bool verify(const Bytes& master_public) const;
};

struct AttackEvent {
    enum class Kind { DdosRequest, Spam };
    SimTime time = 0;
    OnionAddress source;
    std::string target;
    Kind kind = Kind::DdosRequest;
};

struct Botmaster {
    NodeId node;
    overlay::KeyPair keys;
    OnionAddress onion;  // the master is itself a hidden service
    std::set<OnionAddress> known_bots;
    std::uint64_t next_command_id = 1;

    Command issue(std::variant<DdosTask, SpamTask> task, SimTime now);
};

enum class ActorKind { Bot, Honeypot, Sybil };

// One overlay participant: a real bot, a defender honeypot (protocol
// identical, records what it learns) or a defender sybil (peers with its
// impersonation target, drops every command).
struct Actor {
    NodeId node;
    ActorKind kind = ActorKind::Bot;
    Phase phase = Phase::Susceptible;
    overlay::KeyPair keys;
    OnionAddress onion;
    PeerTable peers;
    SimTime last_update = 0;
    std::set<std::uint64_t> seen_commands;
    std::uint64_t executing_command = 0;

    // honeypots: every address observed through peer exchanges
    std::vector<OnionAddress> harvested;
    // sybils
    OnionAddress impersonation_target;

    bool infected() const {
        return phase == Phase::Rally || phase == Phase::Waiting || phase == Phase::Executing;
    }
};

struct SwarmParams {
    std::size_t peer_capacity = 8;        // k
    SimTime update_period = 60;           // T_p
    std::uint32_t circuit_length = 3;
    overlay::LatencyRange latency{};
    std::uint32_t bootstrap_retry_budget = 1;
    std::uint32_t command_seed_count = 3;
    // Entries a responder reveals per exchange: a uniform sample of its
    // table. Small samples keep view churn bounded and mix the overlay.
    std::uint32_t advertise_count = 3;
    // Advertised addresses actually folded into the table per update round,
    // sampled uniformly from everything heard. Bounds per-round churn so
    // established mutual links persist while fresh addresses circulate.
    std::uint32_t merge_cap = 2;
    bool sybil_gossip = false;  // sybils advertise fellow sybils in exchanges
};

struct ContactResult {
    bool responded = false;
    std::vector<OnionAddress> advertised;
};

enum class BootstrapOutcome { Joined, Exhausted };

struct AttackBurstPlan {
    SimTime time;
    std::uint32_t events;
    bool final_tick;
};

struct PushResult {
    std::uint32_t accepted = 0;  // unique bot deliveries
    struct Started {
        std::uint32_t bot;
        std::vector<AttackBurstPlan> plan;
    };
    std::vector<Started> started;  // bots that went Waiting -> Executing
};

// The bot population plus defender-controlled overlay actors, and every
// operation that moves state between them. All communication goes through
// rendezvous sessions on the overlay; no method ever touches a peer's IP.
class Swarm {
public:
    Swarm(overlay::Network& network, Rng& rng, SwarmParams params, Transcript& transcript);

    // population management -------------------------------------------------
    std::uint32_t add_host();  // susceptible bot slot, no identity yet
    std::uint32_t add_defender_actor(ActorKind kind, OnionAddress impersonation_target = {});
    std::size_t actor_count() const { return actors_.size(); }
    Actor& actor(std::uint32_t idx) { return actors_.at(idx); }
    const Actor& actor(std::uint32_t idx) const { return actors_.at(idx); }
    std::optional<std::uint32_t> actor_by_onion(const OnionAddress& onion) const;
    const SwarmParams& params() const { return params_; }

    // 5-slot census over real bots only (defender actors excluded).
    struct Census {
        std::uint32_t susceptible = 0, rally = 0, waiting = 0, executing = 0, neutralized = 0;
    };
    Census census() const;

    void set_hardcoded_peers(std::vector<OnionAddress> addrs) { hardcoded_ = std::move(addrs); }
    const std::vector<OnionAddress>& hardcoded_peers() const { return hardcoded_; }

    // lifecycle operations ---------------------------------------------------
    // Init-time infection: unconditional Susceptible -> Rally.
    void seed_infection(std::uint32_t idx, SimTime now);

    // With probability beta, a susceptible target enters Rally with a fresh
    // identity. Returns whether the infection happened.
    bool try_infect(std::uint32_t source, std::uint32_t target, double beta, SimTime now);

    // Contacts the hardcoded list; every live responder joins the table.
    // Joined implies Rally -> Waiting. Exhausted leaves the bot in Rally to
    // be retried on its next update event.
    BootstrapOutcome bootstrap(std::uint32_t bot, SimTime now);

    // Refreshes the table from current peers: dead entries dropped,
    // advertised addresses merged, responders confirmed freshest, trimmed to
    // k. An emptied table sends the bot back to Rally.
    void update_peers(std::uint32_t bot, SimTime now);

    // One peering exchange initiated by `initiator` toward an onion address
    // (sybil pings, honeypot exchanges). Confirms both directions.
    bool ping_peer(std::uint32_t initiator, const OnionAddress& target, SimTime now);

    // Pushes a signed command to the master's seed bots and floods it over
    // the frozen peer graph, one forward per bot, duplicate ids ignored.
    // The flood resolves within the current tick.
    PushResult push_command(Botmaster& master, const Command& cmd, SimTime now);

    // Waiting -> Executing for a verified, unseen command; returns the tick
    // plan of attack bursts. An empty task returns to Waiting immediately.
    std::vector<AttackBurstPlan> execute(std::uint32_t bot, const Command& cmd, SimTime now);

    // Emits this tick's attack events if the bot is still executing.
    void attack_tick(std::uint32_t bot, const AttackBurst& burst, const Command& cmd, SimTime now,
                     std::vector<AttackEvent>& out);

    // defender hooks ----------------------------------------------------------
    void set_phase(std::uint32_t idx, Phase to, SimTime now);  // transition with legality check
    const std::vector<Command>& command_log() const { return command_log_; }
    const Command* command_by_id(std::uint64_t id) const;
    void log_command(const Command& cmd) { command_log_.push_back(cmd); }

    // Peer-graph snapshot used by reachability analysis: for every actor,
    // its current table entries.
    std::vector<std::pair<OnionAddress, std::vector<OnionAddress>>> peer_graph() const;

private:
    struct DeliveryOutcome {
        bool accepted = false;
        bool became_executing = false;
    };

    ContactResult contact(std::uint32_t initiator, const OnionAddress& target_onion, SimTime now);
    DeliveryOutcome deliver_command(NodeId sender_node, const OnionAddress& sender_onion,
                                    std::uint32_t target, const Command& cmd,
                                    const Bytes& master_public, SimTime now);
    overlay::Session open_session(NodeId initiator_node, const OnionAddress& initiator_onion,
                                  const Actor& responder);
    void transition(std::uint32_t idx, Phase to, SimTime now);
    void grant_identity(Actor& actor);
    std::vector<AttackBurstPlan> plan_bursts(const Command& cmd, SimTime now) const;

    overlay::Network& network_;
    Rng& rng_;
    SwarmParams params_;
    Transcript& transcript_;
    std::vector<Actor> actors_;
    std::unordered_map<std::string, std::uint32_t> by_onion_;
    std::vector<OnionAddress> hardcoded_;
    std::vector<Command> command_log_;
};

}  // namespace onionnet::botnet
