#include "onionnet/botnet.hpp"

#include <algorithm>
#include <cassert>
#include <deque>

#include "onionnet/errors.hpp"

namespace onionnet::botnet {

namespace {

void put_u64_le(Bytes& out, std::uint64_t value) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(value >> (i * 8)));
}

std::string join_addresses(const std::vector<OnionAddress>& addrs) {
    std::string out;
    for (std::size_t i = 0; i < addrs.size(); ++i) {
        if (i) out.push_back(',');
        out += addrs[i].value;
    }
    return out;
}

}  // namespace

const char* to_string(Phase phase) {
    switch (phase) {
        case Phase::Susceptible: return "Susceptible";
        case Phase::Rally: return "Rally";
        case Phase::Waiting: return "Waiting";
        case Phase::Executing: return "Executing";
        case Phase::Neutralized: return "Neutralized";
    }
    return "Unknown";
}

bool legal_transition(Phase from, Phase to) {
    switch (from) {
        case Phase::Susceptible:
            return to == Phase::Rally;
        case Phase::Rally:
            return to == Phase::Waiting || to == Phase::Neutralized;
        case Phase::Waiting:
            // Waiting -> Rally is the orphaned-bot fallback.
            return to == Phase::Executing || to == Phase::Rally || to == Phase::Neutralized;
        case Phase::Executing:
            return to == Phase::Waiting || to == Phase::Neutralized;
        case Phase::Neutralized:
            return false;  // absorbing
    }
    return false;
}

void PeerTable::confirm(const OnionAddress& peer, const OnionAddress& self) {
    if (peer.empty() || peer == self) return;
    const auto it = std::find(entries_.begin(), entries_.end(), peer);
    if (it != entries_.end()) entries_.erase(it);
    entries_.insert(entries_.begin(), peer);
    if (entries_.size() > capacity_) entries_.resize(capacity_);
}

void PeerTable::drop(const OnionAddress& peer) {
    const auto it = std::find(entries_.begin(), entries_.end(), peer);
    if (it != entries_.end()) entries_.erase(it);
}

bool PeerTable::contains(const OnionAddress& peer) const {
    return std::find(entries_.begin(), entries_.end(), peer) != entries_.end();
}

Bytes Command::canonical_bytes() const {
    Bytes out;
    put_u64_le(out, id);
    put_u64_le(out, issued_at);
    if (const auto* ddos = std::get_if<DdosTask>(&task)) {
        out.push_back(0x01);
        put_u64_le(out, ddos->rate);
        put_u64_le(out, ddos->duration);
        out.insert(out.end(), ddos->target.begin(), ddos->target.end());
    } else {
        const auto& spam = std::get<SpamTask>(task);
        out.push_back(0x02);
        put_u64_le(out, spam.volume);
        put_u64_le(out, spam.window);
    }
    return out;
}

bool Command::verify(const Bytes& master_public) const {
    return signature == checksum64(master_public, canonical_bytes());
}

Command Botmaster::issue(std::variant<DdosTask, SpamTask> task, SimTime now) {
    Command cmd;
    cmd.id = next_command_id++;
    cmd.task = std::move(task);
    cmd.issued_at = now;
    cmd.signature = checksum64(keys.public_key, cmd.canonical_bytes());
    return cmd;
}

Swarm::Swarm(overlay::Network& network, Rng& rng, SwarmParams params, Transcript& transcript)
    : network_(network), rng_(rng), params_(params), transcript_(transcript) {}

std::uint32_t Swarm::add_host() {
    Actor actor;
    actor.node = network_.add_node();
    actor.kind = ActorKind::Bot;
    actor.phase = Phase::Susceptible;
    actor.peers.set_capacity(params_.peer_capacity);
    actors_.push_back(std::move(actor));
    return static_cast<std::uint32_t>(actors_.size() - 1);
}

std::uint32_t Swarm::add_defender_actor(ActorKind kind, OnionAddress impersonation_target) {
    assert(kind != ActorKind::Bot);
    Actor actor;
    actor.node = network_.add_node();
    actor.kind = kind;
    actor.phase = Phase::Waiting;  // participates in peering immediately
    actor.peers.set_capacity(params_.peer_capacity);
    actor.impersonation_target = std::move(impersonation_target);
    actors_.push_back(std::move(actor));
    const auto idx = static_cast<std::uint32_t>(actors_.size() - 1);
    grant_identity(actors_[idx]);
    return idx;
}

std::optional<std::uint32_t> Swarm::actor_by_onion(const OnionAddress& onion) const {
    const auto it = by_onion_.find(onion.value);
    if (it == by_onion_.end()) return std::nullopt;
    return it->second;
}

Swarm::Census Swarm::census() const {
    Census c;
    for (const Actor& actor : actors_) {
        if (actor.kind != ActorKind::Bot) continue;
        switch (actor.phase) {
            case Phase::Susceptible: ++c.susceptible; break;
            case Phase::Rally: ++c.rally; break;
            case Phase::Waiting: ++c.waiting; break;
            case Phase::Executing: ++c.executing; break;
            case Phase::Neutralized: ++c.neutralized; break;
        }
    }
    return c;
}

void Swarm::grant_identity(Actor& actor) {
    auto [keys, onion] = network_.issue_identity(rng_);
    actor.keys = std::move(keys);
    actor.onion = std::move(onion);
    network_.bind_onion(actor.onion, actor.node);
    by_onion_[actor.onion.value] = static_cast<std::uint32_t>(&actor - actors_.data());
}

void Swarm::transition(std::uint32_t idx, Phase to, SimTime now) {
    Actor& actor = actors_.at(idx);
    if (!legal_transition(actor.phase, to)) {
        throw SimError(std::string("illegal transition ") + to_string(actor.phase) + " -> " +
                       to_string(to));
    }
    transcript_.state_transition(now, actor.onion.value, to_string(actor.phase), to_string(to));
    actor.phase = to;
}

void Swarm::set_phase(std::uint32_t idx, Phase to, SimTime now) { transition(idx, to, now); }

void Swarm::seed_infection(std::uint32_t idx, SimTime now) {
    Actor& actor = actors_.at(idx);
    assert(actor.phase == Phase::Susceptible);
    grant_identity(actor);
    transition(idx, Phase::Rally, now);
}

bool Swarm::try_infect(std::uint32_t /*source*/, std::uint32_t target, double beta, SimTime now) {
    Actor& victim = actors_.at(target);
    if (victim.kind != ActorKind::Bot || victim.phase != Phase::Susceptible) return false;
    if (!rng_.chance(beta)) return false;
    grant_identity(victim);
    transition(target, Phase::Rally, now);
    return true;
}

overlay::Session Swarm::open_session(NodeId initiator_node, const OnionAddress& initiator_onion,
                                     const Actor& responder) {
    const std::size_t len = std::max<std::size_t>(1, params_.circuit_length);

    // The rendezvous relay is the shared terminal of both half-circuits; the
    // first (randomly chosen) relay of the client side is the introduction
    // point.
    const NodeId rendezvous = network_.pick_relays(rng_, 1, {initiator_node, responder.node}).front();

    auto client_relays = network_.pick_relays(rng_, len - 1, {initiator_node, rendezvous});
    client_relays.push_back(rendezvous);
    overlay::Circuit client_circuit =
        overlay::build_circuit(rng_, initiator_node, client_relays, overlay::CircuitRole::ClientSide);

    auto service_relays = network_.pick_relays(rng_, len - 1, {responder.node, rendezvous});
    service_relays.push_back(rendezvous);
    overlay::Circuit service_circuit =
        overlay::build_circuit(rng_, responder.node, service_relays, overlay::CircuitRole::ServiceSide);

    overlay::Session session = overlay::rendezvous_connect(
        overlay::Session::Endpoint{initiator_node, initiator_onion, std::move(client_circuit)},
        overlay::Session::Endpoint{responder.node, responder.onion, std::move(service_circuit)},
        rendezvous, rng_);

    if (transcript_.wire_enabled()) transcript_.record_wire(session.transcript_line() + "\n");
    return session;
}

ContactResult Swarm::contact(std::uint32_t initiator, const OnionAddress& target_onion, SimTime now) {
    ContactResult result;
    Actor& from = actors_.at(initiator);
    const auto target_idx = actor_by_onion(target_onion);
    if (!target_idx) return result;  // address no longer bound
    Actor& to = actors_.at(*target_idx);
    if (*target_idx == initiator) return result;
    if (!network_.alive(to.node)) return result;
    // Neutralized bots are cut off and susceptible hosts run no service.
    if (to.kind == ActorKind::Bot && !to.infected()) return result;

    overlay::Session session = open_session(from.node, from.onion, to);

    const bool wired = transcript_.wire_enabled();
    std::vector<overlay::DeliveryTrace> traces;
    std::vector<std::string> wire;
    const std::string request = "peers?";
    const Bytes request_bytes(request.begin(), request.end());
    session.send(overlay::Session::Side::Client, request_bytes, network_, rng_, params_.latency,
                 wired ? &traces : nullptr, wired ? &wire : nullptr);

    // Responder advertises a uniform sample of its neighbor list. Sybils
    // stay silent about the honest overlay; with gossip enabled they
    // advertise their clone group instead.
    if (to.kind == ActorKind::Sybil) {
        if (params_.sybil_gossip) result.advertised = to.peers.entries();
    } else {
        const auto& entries = to.peers.entries();
        const std::uint32_t n = std::min<std::uint32_t>(
            params_.advertise_count, static_cast<std::uint32_t>(entries.size()));
        if (n == entries.size()) {
            result.advertised = entries;
        } else {
            for (auto idx : rng_.sample_indices(static_cast<std::uint32_t>(entries.size()), n)) {
                result.advertised.push_back(entries[idx]);
            }
        }
    }

    const std::string reply = "peers:" + join_addresses(result.advertised);
    const Bytes reply_bytes(reply.begin(), reply.end());
    session.send(overlay::Session::Side::Service, reply_bytes, network_, rng_, params_.latency,
                 wired ? &traces : nullptr, wired ? &wire : nullptr);

    if (wired) {
        for (const auto& trace : traces) transcript_.record_trace(trace);
        for (const auto& hex : wire) transcript_.record_wire("envelope " + hex + "\n");
        transcript_.record_wire("payload " + request + "\n");
        transcript_.record_wire("payload " + reply + "\n");
    }

    // Mutual confirmation: the responder learns the initiator's address from
    // the exchange, the initiator has just confirmed the responder is live.
    to.peers.confirm(from.onion, to.onion);
    from.peers.confirm(to.onion, from.onion);

    if (to.kind == ActorKind::Honeypot) {
        to.harvested.push_back(from.onion);
    }
    if (from.kind == ActorKind::Honeypot) {
        from.harvested.push_back(to.onion);
        for (const auto& addr : result.advertised) from.harvested.push_back(addr);
    }

    // A rallying bot pulled into the overlay by an inbound exchange is
    // connected and can wait for commands.
    if (to.kind == ActorKind::Bot && to.phase == Phase::Rally && !to.peers.empty()) {
        transition(*target_idx, Phase::Waiting, now);
        to.last_update = now;
    }

    result.responded = true;
    return result;
}

BootstrapOutcome Swarm::bootstrap(std::uint32_t bot, SimTime now) {
    Actor& actor = actors_.at(bot);
    assert(actor.phase == Phase::Rally);
    for (std::uint32_t attempt = 0; attempt < std::max(1u, params_.bootstrap_retry_budget); ++attempt) {
        for (const OnionAddress& addr : hardcoded_) {
            if (addr == actor.onion) continue;  // self-entry in the shipped list
            contact(bot, addr, now);
        }
        if (!actor.peers.empty()) break;
    }
    if (actor.peers.empty()) return BootstrapOutcome::Exhausted;
    if (actors_[bot].phase == Phase::Rally) transition(bot, Phase::Waiting, now);
    actors_[bot].last_update = now;
    return BootstrapOutcome::Joined;
}

void Swarm::update_peers(std::uint32_t bot, SimTime now) {
    Actor& actor = actors_.at(bot);
    if (actor.phase != Phase::Waiting && actor.phase != Phase::Executing) return;

    // Each responder is confirmed as its reply lands (inside contact);
    // unresponsive entries fall out. Advertised addresses are pooled and a
    // bounded uniform sample of them joins the table as the freshest
    // confirmations of the round.
    const std::vector<OnionAddress> current = actor.peers.entries();
    std::vector<OnionAddress> heard;
    for (const OnionAddress& peer : current) {
        ContactResult res = contact(bot, peer, now);
        if (!res.responded) {
            actor.peers.drop(peer);
            continue;
        }
        for (OnionAddress& addr : res.advertised) heard.push_back(std::move(addr));
    }
    if (!heard.empty() && params_.merge_cap > 0) {
        const std::uint32_t n =
            std::min<std::uint32_t>(params_.merge_cap, static_cast<std::uint32_t>(heard.size()));
        for (auto idx : rng_.sample_indices(static_cast<std::uint32_t>(heard.size()), n)) {
            actor.peers.confirm(heard[idx], actor.onion);
        }
    }

    actor.last_update = now;

    if (actor.peers.empty() && actor.phase == Phase::Waiting) {
        // Orphaned: every peer gone. Fall back to Rally and re-bootstrap.
        transition(bot, Phase::Rally, now);
    }

    if (transcript_.wire_enabled()) {
        transcript_.record_wire("table t=" + std::to_string(now) + " bot=" + actor.onion.value +
                                " entries=" + join_addresses(actor.peers.entries()) + "\n");
    }
}

bool Swarm::ping_peer(std::uint32_t initiator, const OnionAddress& target, SimTime now) {
    return contact(initiator, target, now).responded;
}

Swarm::DeliveryOutcome Swarm::deliver_command(NodeId sender_node, const OnionAddress& sender_onion,
                                              std::uint32_t target, const Command& cmd,
                                              const Bytes& master_public, SimTime now) {
    DeliveryOutcome outcome;
    Actor& to = actors_.at(target);
    if (!network_.alive(to.node)) return outcome;

    // Defender actors swallow command traffic.
    if (to.kind != ActorKind::Bot) {
        transcript_.command_absorbed(now, cmd.id, to.onion.value);
        if (to.kind == ActorKind::Honeypot) to.harvested.push_back(sender_onion);
        return outcome;
    }
    // Partitioned bots are unreachable; only connected bots accept pushes.
    if (to.phase != Phase::Waiting && to.phase != Phase::Executing) return outcome;
    if (!cmd.verify(master_public)) return outcome;  // dropped silently
    if (to.seen_commands.count(cmd.id)) return outcome;

    // Carry the command over a rendezvous session so the wire transcript
    // reflects real envelope traffic.
    overlay::Session session = open_session(sender_node, sender_onion, to);
    const bool wired = transcript_.wire_enabled();
    std::vector<overlay::DeliveryTrace> traces;
    std::vector<std::string> wire;
    const Bytes body = cmd.canonical_bytes();
    session.send(overlay::Session::Side::Client, body, network_, rng_, params_.latency,
                 wired ? &traces : nullptr, wired ? &wire : nullptr);
    if (wired) {
        for (const auto& trace : traces) transcript_.record_trace(trace);
        for (const auto& hex : wire) transcript_.record_wire("envelope " + hex + "\n");
    }

    to.seen_commands.insert(cmd.id);
    transcript_.command_delivery(now, cmd.id, to.onion.value);
    outcome.accepted = true;
    outcome.became_executing = to.phase == Phase::Waiting;
    return outcome;
}

PushResult Swarm::push_command(Botmaster& master, const Command& cmd, SimTime now) {
    PushResult result;
    command_log_.push_back(cmd);

    // Seed bots: a configurable number of the master's known addresses.
    std::vector<OnionAddress> known(master.known_bots.begin(), master.known_bots.end());
    std::vector<OnionAddress> seeds;
    if (!known.empty()) {
        const auto picks = rng_.sample_indices(
            static_cast<std::uint32_t>(known.size()),
            std::min<std::uint32_t>(params_.command_seed_count,
                                    static_cast<std::uint32_t>(known.size())));
        for (auto idx : picks) seeds.push_back(known[idx]);
    }

    {
        Transcript::CommandPush push;
        push.time = now;
        push.command = cmd.id;
        for (const OnionAddress& seed : seeds) push.seeds.push_back(seed.value);
        if (transcript_.capture) {
            for (const Actor& actor : actors_) {
                if (actor.onion.empty()) continue;
                Transcript::GraphNode node;
                node.onion = actor.onion.value;
                for (const OnionAddress& peer : actor.peers.entries()) {
                    node.peers.push_back(peer.value);
                }
                node.connected = actor.kind == ActorKind::Bot &&
                                 (actor.phase == Phase::Waiting || actor.phase == Phase::Executing);
                node.absorbing = actor.kind != ActorKind::Bot;
                push.graph.push_back(std::move(node));
            }
        }
        transcript_.pushes.push_back(std::move(push));
    }

    std::deque<std::uint32_t> worklist;
    auto handle_outcome = [&](std::uint32_t target, const DeliveryOutcome& outcome) {
        if (!outcome.accepted) return;
        ++result.accepted;
        worklist.push_back(target);
        if (outcome.became_executing) {
            result.started.push_back({target, execute(target, cmd, now)});
        }
    };

    for (const OnionAddress& addr : seeds) {
        const auto target = actor_by_onion(addr);
        if (!target) continue;
        handle_outcome(*target, deliver_command(master.node, master.onion, *target, cmd,
                                                master.keys.public_key, now));
    }

    // Flood: each accepting bot forwards exactly once to its current table.
    // Everything resolves within this tick, so the peer graph the flood sees
    // is the graph at push time.
    while (!worklist.empty()) {
        const std::uint32_t bot = worklist.front();
        worklist.pop_front();
        Actor& from = actors_.at(bot);
        const std::vector<OnionAddress> fanout = from.peers.entries();
        transcript_.command_forward(now, cmd.id, from.onion.value,
                                    static_cast<std::uint32_t>(fanout.size()));
        for (const OnionAddress& peer : fanout) {
            const auto target = actor_by_onion(peer);
            if (!target) continue;
            handle_outcome(*target, deliver_command(from.node, from.onion, *target, cmd,
                                                    master.keys.public_key, now));
        }
    }
    return result;
}

std::vector<AttackBurstPlan> Swarm::plan_bursts(const Command& cmd, SimTime now) const {
    std::vector<AttackBurstPlan> plan;
    if (const auto* ddos = std::get_if<DdosTask>(&cmd.task)) {
        for (SimTime d = 0; d < ddos->duration; ++d) {
            plan.push_back({now + d, ddos->rate, d + 1 == ddos->duration});
        }
    } else {
        const auto& spam = std::get<SpamTask>(cmd.task);
        if (spam.volume > 0 && spam.window > 0) {
            std::vector<std::uint32_t> per_tick(spam.window, 0);
            for (std::uint32_t i = 0; i < spam.volume; ++i) {
                ++per_tick[rng_.uniform(0, spam.window - 1)];
            }
            SimTime last = 0;
            for (SimTime d = 0; d < spam.window; ++d) {
                if (per_tick[d] > 0) last = d;
            }
            for (SimTime d = 0; d <= last; ++d) {
                if (per_tick[d] > 0 || d == last) {
                    plan.push_back({now + d, per_tick[d], d == last});
                }
            }
        }
    }
    return plan;
}

std::vector<AttackBurstPlan> Swarm::execute(std::uint32_t bot, const Command& cmd, SimTime now) {
    Actor& actor = actors_.at(bot);
    if (actor.phase != Phase::Waiting) return {};
    actor.seen_commands.insert(cmd.id);
    transition(bot, Phase::Executing, now);
    actor.executing_command = cmd.id;
    transcript_.command_execution(now, cmd.id, actor.onion.value);
    std::vector<AttackBurstPlan> plan = plan_bursts(cmd, now);
    if (plan.empty()) {
        // Degenerate task: nothing to emit, return to Waiting at once.
        transition(bot, Phase::Waiting, now);
        actor.executing_command = 0;
    }
    return plan;
}

void Swarm::attack_tick(std::uint32_t bot, const AttackBurst& burst, const Command& cmd, SimTime now,
                        std::vector<AttackEvent>& out) {
    Actor& actor = actors_.at(bot);
    // Attack events come from executing bots only; a bot neutralized
    // mid-task goes quiet.
    if (actor.phase == Phase::Executing && actor.executing_command == burst.command_id) {
        const bool is_ddos = std::holds_alternative<DdosTask>(cmd.task);
        const std::string target =
            is_ddos ? std::get<DdosTask>(cmd.task).target : std::string("spam");
        for (std::uint32_t i = 0; i < burst.events; ++i) {
            out.push_back(AttackEvent{now, actor.onion, target,
                                      is_ddos ? AttackEvent::Kind::DdosRequest
                                              : AttackEvent::Kind::Spam});
        }
        if (burst.final_tick) {
            transition(bot, Phase::Waiting, now);
            actor.executing_command = 0;
        }
    }
}

const Command* Swarm::command_by_id(std::uint64_t id) const {
    for (const Command& cmd : command_log_) {
        if (cmd.id == id) return &cmd;
    }
    return nullptr;
}

std::vector<std::pair<OnionAddress, std::vector<OnionAddress>>> Swarm::peer_graph() const {
    std::vector<std::pair<OnionAddress, std::vector<OnionAddress>>> graph;
    graph.reserve(actors_.size());
    for (const Actor& actor : actors_) {
        if (actor.onion.empty()) continue;
        graph.emplace_back(actor.onion, actor.peers.entries());
    }
    return graph;
}

}  // namespace onionnet::botnet
