#include "onionnet/soap.hpp"

#include "onionnet/errors.hpp"

namespace onionnet::soap {

using botnet::Actor;
using botnet::ActorKind;
using botnet::Phase;

Defender::Defender(Swarm& swarm, Rng& rng, Policy policy)
    : swarm_(swarm), rng_(rng), policy_(policy) {}

bool Defender::is_defender_onion(const OnionAddress& onion) const {
    const auto idx = swarm_.actor_by_onion(onion);
    return idx && swarm_.actor(*idx).kind != ActorKind::Bot;
}

void Defender::discover(const OnionAddress& onion) {
    if (onion.empty() || is_defender_onion(onion)) return;
    discovered_.insert(onion);
}

std::uint32_t Defender::plant_honeypot(SimTime now) {
    const std::uint32_t idx = swarm_.add_defender_actor(ActorKind::Honeypot);
    honeypots_.push_back(idx);
    // Join through the same hardcoded list a real bot would use.
    for (const OnionAddress& addr : swarm_.hardcoded_peers()) {
        swarm_.ping_peer(idx, addr, now);
    }
    harvest_honeypots();
    return idx;
}

std::optional<OnionAddress> Defender::reverse_engineer(std::uint32_t host, SimTime now) {
    const Actor& actor = swarm_.actor(host);
    if (actor.kind != ActorKind::Bot || actor.phase == Phase::Susceptible) {
        throw HostNotInfectedError{};
    }
    (void)now;
    if (!rng_.chance(policy_.p_detect)) return std::nullopt;
    discover(actor.onion);
    for (const OnionAddress& peer : actor.peers.entries()) discover(peer);
    return actor.onion;
}

std::vector<SybilNode> Defender::spawn_sybils(const OnionAddress& target, std::uint32_t n, SimTime now) {
    if (n == 0) throw SimError("sybil group size must be at least 1");
    if (!discovered_.count(target)) throw TargetUnknownError(target.value);

    auto& group = sybils_[target];
    std::vector<SybilNode> spawned;
    for (std::uint32_t i = 0; i < n; ++i) {
        const std::uint32_t idx = swarm_.add_defender_actor(ActorKind::Sybil, target);
        const Actor& actor = swarm_.actor(idx);
        SybilNode sybil{actor.node, actor.onion, target, idx};
        group.push_back(sybil);
        spawned.push_back(sybil);
        ++sybils_active_;
    }
    // Clones know their group; under the gossip toggle that is what they
    // advertise. The first volley happens here.
    for (const SybilNode& sybil : group) {
        for (const SybilNode& sibling : group) {
            if (sibling.actor != sybil.actor) {
                swarm_.actor(sybil.actor).peers.confirm(sibling.onion, sybil.onion);
            }
        }
    }
    for (const SybilNode& sybil : spawned) {
        swarm_.ping_peer(sybil.actor, target, now);
    }
    return spawned;
}

bool Defender::check_partitioned(const OnionAddress& target, SimTime now) {
    if (!discovered_.count(target)) throw TargetUnknownError(target.value);
    if (neutralized_.count(target)) return true;

    const auto idx = swarm_.actor_by_onion(target);
    if (!idx) return false;
    const Actor& actor = swarm_.actor(*idx);
    if (actor.kind != ActorKind::Bot) return false;
    if (actor.peers.empty()) return false;

    for (const OnionAddress& entry : actor.peers.entries()) {
        const auto peer_idx = swarm_.actor_by_onion(entry);
        if (!peer_idx || swarm_.actor(*peer_idx).kind != ActorKind::Sybil) return false;
    }

    neutralized_.insert(target);
    if (actor.phase != Phase::Neutralized) {
        swarm_.set_phase(*idx, Phase::Neutralized, now);
    }
    return true;
}

void Defender::harvest_honeypots() {
    for (const std::uint32_t idx : honeypots_) {
        Actor& pot = swarm_.actor(idx);
        for (const OnionAddress& addr : pot.harvested) discover(addr);
        for (const OnionAddress& addr : pot.peers.entries()) discover(addr);
        pot.harvested.clear();
    }
}

void Defender::step(SimTime now) {
    // Sybil volleys first, each followed by its partition check, so the
    // check sees the table exactly as the volley left it.
    for (auto& [target, group] : sybils_) {
        if (neutralized_.count(target)) continue;
        for (const SybilNode& sybil : group) {
            swarm_.ping_peer(sybil.actor, target, now);
        }
        check_partitioned(target, now);
    }

    const bool discovery_due =
        !last_discovery_ || now - *last_discovery_ >= policy_.check_interval;
    if (discovery_due) {
        last_discovery_ = now;

        // Honeypots run their own peer exchanges and hand over the harvest.
        for (const std::uint32_t idx : honeypots_) {
            const std::vector<OnionAddress> table = swarm_.actor(idx).peers.entries();
            for (const OnionAddress& addr : table) {
                swarm_.ping_peer(idx, addr, now);
            }
        }
        harvest_honeypots();

        // Reverse-engineering sweep over infected hosts.
        for (std::uint32_t idx = 0; idx < swarm_.actor_count(); ++idx) {
            const Actor& actor = swarm_.actor(idx);
            if (actor.kind != ActorKind::Bot || !actor.infected()) continue;
            if (rng_.chance(policy_.p_detect)) {
                discover(actor.onion);
                for (const OnionAddress& peer : actor.peers.entries()) discover(peer);
            }
        }
    }

    // Fresh targets get their clone group; the spawn pings immediately and
    // the check may already partition them.
    for (const OnionAddress& target : discovered_) {
        if (neutralized_.count(target) || sybils_.count(target)) continue;
        const auto idx = swarm_.actor_by_onion(target);
        if (!idx || swarm_.actor(*idx).kind != ActorKind::Bot) continue;
        spawn_sybils(target, policy_.sybils_per_target, now);
        check_partitioned(target, now);
    }
}

NeutralizationReport Defender::report() const {
    NeutralizationReport rep;
    rep.discovered = static_cast<std::uint32_t>(discovered_.size());
    rep.neutralized = static_cast<std::uint32_t>(neutralized_.size());
    rep.sybils_active = sybils_active_;
    const auto census = swarm_.census();
    const std::uint32_t ever_infected =
        census.rally + census.waiting + census.executing + census.neutralized;
    rep.neutralized_fraction =
        ever_infected == 0 ? 0.0 : static_cast<double>(rep.neutralized) / ever_infected;
    return rep;
}

}  // namespace onionnet::soap
