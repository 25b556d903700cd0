#include <doctest.h>

#include <algorithm>
#include <set>

#include "onionnet/errors.hpp"
#include "onionnet/soap.hpp"
#include "oracles.hpp"

using namespace onionnet;
using namespace onionnet::botnet;
using namespace onionnet::soap;

namespace {

struct SoapFixture {
    Rng rng;
    overlay::Network network;
    Transcript transcript;
    SwarmParams params;
    Swarm swarm;
    Botmaster master;
    SimTime now = 0;

    explicit SoapFixture(std::uint32_t hosts, std::uint64_t seed = 77)
        : rng(seed), swarm(network, rng, params, transcript) {
        for (int i = 0; i < 12; ++i) network.add_relay();
        for (std::uint32_t i = 0; i < hosts; ++i) swarm.add_host();
        master.node = network.add_node();
        auto [keys, onion] = network.issue_identity(rng);
        master.keys = std::move(keys);
        master.onion = std::move(onion);
        network.bind_onion(master.onion, master.node);
    }

    void raise_botnet(std::uint32_t n) {
        std::vector<overlay::OnionAddress> hardcoded;
        for (std::uint32_t i = 0; i < n; ++i) {
            swarm.seed_infection(i, now);
            master.known_bots.insert(swarm.actor(i).onion);
            if (hardcoded.size() < 8) hardcoded.push_back(swarm.actor(i).onion);
        }
        swarm.set_hardcoded_peers(hardcoded);
        ++now;
        for (std::uint32_t i = 0; i < n; ++i) {
            if (swarm.actor(i).phase == Phase::Rally) swarm.bootstrap(i, now);
        }
        for (int round = 0; round < 3; ++round) {
            now += params.update_period;
            for (std::uint32_t i = 0; i < n; ++i) swarm.update_peers(i, now);
        }
    }
};

}  // namespace

TEST_CASE("honeypots harvest what the protocol shows them") {
    SoapFixture fx(50);
    fx.raise_botnet(50);
    Policy policy;
    policy.p_detect = 0.0;  // isolate the honeypot channel
    policy.honeypot_count = 1;
    Defender defender(fx.swarm, fx.rng, policy);

    const std::uint32_t pot = defender.plant_honeypot(fx.now);
    const auto direct_peers = fx.swarm.actor(pot).peers.entries();
    REQUIRE_FALSE(direct_peers.empty());

    // lower bound: everything one exchange away is discovered
    for (const auto& addr : direct_peers) {
        CHECK(defender.discovered().count(addr));
    }

    const auto before = defender.discovered().size();
    for (int round = 0; round < 4; ++round) {
        fx.now += fx.params.update_period;
        for (std::uint32_t i = 0; i < 50; ++i) fx.swarm.update_peers(i, fx.now);
        defender.step(fx.now);
    }
    CHECK(defender.discovered().size() >= before);
    CHECK(defender.discovered().size() > direct_peers.size());

    // the honeypot's own address is never "discovered"
    CHECK_FALSE(defender.discovered().count(fx.swarm.actor(pot).onion));
}

TEST_CASE("a honeypot in an empty botnet discovers nothing") {
    SoapFixture fx(10);
    Policy policy;
    policy.p_detect = 0.0;
    Defender defender(fx.swarm, fx.rng, policy);
    defender.plant_honeypot(fx.now);
    defender.step(fx.now);
    CHECK(defender.discovered().empty());
}

TEST_CASE("reverse engineering is a probability-gated oracle") {
    SoapFixture fx(20);
    fx.raise_botnet(10);

    SUBCASE("p=1 yields the host address plus its whole table") {
        Policy policy;
        policy.p_detect = 1.0;
        Defender defender(fx.swarm, fx.rng, policy);
        const auto peers = fx.swarm.actor(0).peers.entries();
        REQUIRE_FALSE(peers.empty());
        const auto found = defender.reverse_engineer(0, fx.now);
        REQUIRE(found.has_value());
        CHECK(*found == fx.swarm.actor(0).onion);
        CHECK(defender.discovered().size() == peers.size() + 1);
    }
    SUBCASE("p=0 never finds anything") {
        Policy policy;
        policy.p_detect = 0.0;
        Defender defender(fx.swarm, fx.rng, policy);
        for (int i = 0; i < 20; ++i) {
            CHECK_FALSE(defender.reverse_engineer(0, fx.now).has_value());
        }
        CHECK(defender.discovered().empty());
    }
    SUBCASE("a host that carries no bot cannot be reverse engineered") {
        Policy policy;
        policy.p_detect = 1.0;
        Defender defender(fx.swarm, fx.rng, policy);
        CHECK_THROWS_AS(defender.reverse_engineer(15, fx.now), HostNotInfectedError);
    }
}

TEST_CASE("sybil groups dominate a discovered target") {
    SoapFixture fx(30);
    fx.raise_botnet(20);
    Policy policy;
    policy.p_detect = 1.0;
    Defender defender(fx.swarm, fx.rng, policy);

    const auto target = fx.swarm.actor(5).onion;
    REQUIRE(defender.reverse_engineer(5, fx.now).has_value());

    SUBCASE("spawning k sybils floods the table to a sybil-only fixpoint") {
        const auto group = defender.spawn_sybils(target, 8, fx.now);
        REQUIRE(group.size() == 8);

        // the volley just happened inside spawn; eviction rule says the k
        // most recent confirmations are now all sybils
        const auto& entries = fx.swarm.actor(5).peers.entries();
        REQUIRE(entries.size() == 8);
        std::set<overlay::OnionAddress> sybil_onions;
        for (const auto& sybil : group) sybil_onions.insert(sybil.onion);
        for (const auto& entry : entries) CHECK(sybil_onions.count(entry));

        // fixpoint: the target's own update keeps the table sybil-only,
        // because sybils respond but advertise nothing
        fx.now += fx.params.update_period;
        fx.swarm.update_peers(5, fx.now);
        for (const auto& entry : fx.swarm.actor(5).peers.entries()) {
            CHECK(sybil_onions.count(entry));
        }
        CHECK(defender.check_partitioned(target, fx.now));
        CHECK(fx.swarm.actor(5).phase == Phase::Neutralized);
    }
    SUBCASE("unknown targets are rejected") {
        CHECK_THROWS_AS(defender.spawn_sybils(overlay::OnionAddress{"nosuchaddressxx2"}, 4, fx.now),
                        TargetUnknownError);
        CHECK_THROWS_AS(defender.check_partitioned(overlay::OnionAddress{"nosuchaddressxx2"}, fx.now),
                        TargetUnknownError);
    }
    SUBCASE("zero sybils is a precondition violation") {
        CHECK_THROWS_AS(defender.spawn_sybils(target, 0, fx.now), SimError);
    }
}

TEST_CASE("partition requires a fully sybil, non-empty table") {
    SoapFixture fx(30);
    fx.raise_botnet(20);
    Policy policy;
    policy.p_detect = 1.0;
    Defender defender(fx.swarm, fx.rng, policy);
    const auto target = fx.swarm.actor(3).onion;
    REQUIRE(defender.reverse_engineer(3, fx.now).has_value());

    SUBCASE("one honest entry blocks the partition") {
        defender.spawn_sybils(target, 7, fx.now);  // n < k: an honest peer survives
        const auto& entries = fx.swarm.actor(3).peers.entries();
        bool any_honest = false;
        for (const auto& entry : entries) {
            const auto idx = fx.swarm.actor_by_onion(entry);
            if (idx && fx.swarm.actor(*idx).kind == ActorKind::Bot) any_honest = true;
        }
        REQUIRE(any_honest);
        CHECK_FALSE(defender.check_partitioned(target, fx.now));
        CHECK(fx.swarm.actor(3).phase != Phase::Neutralized);
    }
}

TEST_CASE("a partitioned bot sees none of ten subsequent pushes") {
    SoapFixture fx(40);
    fx.raise_botnet(30);
    Policy policy;
    policy.p_detect = 1.0;
    Defender defender(fx.swarm, fx.rng, policy);

    const auto target = fx.swarm.actor(7).onion;
    REQUIRE(defender.reverse_engineer(7, fx.now).has_value());
    defender.spawn_sybils(target, 8, fx.now);
    REQUIRE(defender.check_partitioned(target, fx.now));
    const SimTime neutralized_at = fx.now;

    for (int p = 0; p < 10; ++p) {
        fx.now += 10;
        const Command cmd = fx.master.issue(DdosTask{"victim", 1, 1}, fx.now);
        fx.swarm.push_command(fx.master, cmd, fx.now);

        // cross-check with the graph oracle: sybils absorbing, target gone
        oracle::PeerGraph graph;
        for (std::uint32_t i = 0; i < fx.swarm.actor_count(); ++i) {
            const Actor& actor = fx.swarm.actor(i);
            if (actor.onion.empty()) continue;
            auto& edges = graph.edges[actor.onion.value];
            for (const auto& peer : actor.peers.entries()) edges.push_back(peer.value);
            if (actor.kind != ActorKind::Bot) {
                graph.absorbing.insert(actor.onion.value);
            } else if (actor.phase == Phase::Waiting || actor.phase == Phase::Executing) {
                graph.connected.insert(actor.onion.value);
            }
        }
        const auto reachable = oracle::reachable_bots(graph, fx.transcript.pushes.back().seeds);
        CHECK_FALSE(reachable.count(target.value));
    }

    for (const auto& delivery : fx.transcript.deliveries) {
        if (delivery.onion == target.value) {
            CHECK(delivery.time <= neutralized_at);
        }
    }
}

TEST_CASE("sybils never forward or originate commands") {
    SoapFixture fx(40);
    fx.raise_botnet(30);
    Policy policy;
    policy.p_detect = 1.0;
    policy.sybils_per_target = 8;
    Defender defender(fx.swarm, fx.rng, policy);
    defender.step(fx.now);  // discovers and floods everything at p=1

    std::set<std::string> sybil_onions;
    for (std::uint32_t i = 0; i < fx.swarm.actor_count(); ++i) {
        if (fx.swarm.actor(i).kind == ActorKind::Sybil) {
            sybil_onions.insert(fx.swarm.actor(i).onion.value);
        }
    }
    REQUIRE_FALSE(sybil_onions.empty());

    fx.now += 5;
    const Command cmd = fx.master.issue(DdosTask{"victim", 1, 1}, fx.now);
    fx.swarm.push_command(fx.master, cmd, fx.now);

    for (const auto& fwd : fx.transcript.forwards) {
        CHECK_FALSE(sybil_onions.count(fwd.onion));
    }
    for (const auto& exec : fx.transcript.executions) {
        CHECK_FALSE(sybil_onions.count(exec.onion));
    }
}

TEST_CASE("the defender loop neutralizes a static botnet completely") {
    SoapFixture fx(40);
    fx.raise_botnet(30);
    Policy policy;
    policy.p_detect = 1.0;  // full discovery
    policy.sybils_per_target = 8;
    policy.ping_interval = 15;
    policy.check_interval = 60;
    Defender defender(fx.swarm, fx.rng, policy);

    // no new infections: the defender wins before long
    for (int step = 0; step < 20; ++step) {
        fx.now += policy.ping_interval;
        defender.step(fx.now);
        for (std::uint32_t i = 0; i < 30; ++i) {
            if (fx.swarm.actor(i).phase == Phase::Waiting ||
                fx.swarm.actor(i).phase == Phase::Executing) {
                if ((fx.now % fx.params.update_period) == 0) fx.swarm.update_peers(i, fx.now);
            }
        }
        if (defender.report().neutralized_fraction == 1.0) break;
    }
    const auto report = defender.report();
    CHECK(report.neutralized_fraction == 1.0);
    CHECK(defender.neutralized().size() == 30);

    const auto census = fx.swarm.census();
    CHECK(census.neutralized == 30);
    CHECK(census.waiting + census.executing + census.rally == 0);
}

TEST_CASE("no discovery means no neutralization") {
    SoapFixture fx(30);
    fx.raise_botnet(20);
    Policy policy;
    policy.p_detect = 0.0;
    policy.honeypot_count = 0;
    Defender defender(fx.swarm, fx.rng, policy);
    for (int step = 0; step < 10; ++step) {
        fx.now += policy.ping_interval;
        defender.step(fx.now);
    }
    CHECK(defender.neutralized().empty());
    CHECK(defender.report().neutralized_fraction == 0.0);
    CHECK(fx.swarm.census().neutralized == 0);
}

TEST_CASE("the neutralized set only grows") {
    SoapFixture fx(30);
    fx.raise_botnet(20);
    Policy policy;
    policy.p_detect = 0.3;
    Defender defender(fx.swarm, fx.rng, policy);
    std::size_t last = 0;
    for (int step = 0; step < 30; ++step) {
        fx.now += policy.ping_interval;
        defender.step(fx.now);
        CHECK(defender.neutralized().size() >= last);
        last = defender.neutralized().size();
    }
    CHECK(last > 0);
}

TEST_CASE("with gossip enabled sybils advertise their clone group") {
    SwarmParams params;
    params.sybil_gossip = true;
    Rng rng(314);
    overlay::Network net;
    Transcript transcript;
    Swarm swarm(net, rng, params, transcript);
    for (int i = 0; i < 12; ++i) net.add_relay();
    for (int i = 0; i < 20; ++i) swarm.add_host();

    std::vector<overlay::OnionAddress> hardcoded;
    for (int i = 0; i < 10; ++i) {
        swarm.seed_infection(i, 0);
        if (hardcoded.size() < 8) hardcoded.push_back(swarm.actor(i).onion);
    }
    swarm.set_hardcoded_peers(hardcoded);
    for (int i = 0; i < 10; ++i) {
        if (swarm.actor(i).phase == Phase::Rally) swarm.bootstrap(i, 1);
    }

    Policy policy;
    policy.p_detect = 1.0;
    Defender defender(swarm, rng, policy);
    const auto target = swarm.actor(2).onion;
    REQUIRE(defender.reverse_engineer(2, 1).has_value());
    const auto group = defender.spawn_sybils(target, 4, 1);

    // the target refreshes against its (partly sybil) table; gossiping
    // sybils seed it with addresses of their siblings
    swarm.update_peers(2, 61);
    std::set<overlay::OnionAddress> sybil_onions;
    for (const auto& s : group) sybil_onions.insert(s.onion);
    std::size_t sybil_entries = 0;
    for (const auto& entry : swarm.actor(2).peers.entries()) {
        if (sybil_onions.count(entry)) ++sybil_entries;
    }
    CHECK(sybil_entries >= 4);  // the group itself plus gossiped siblings stay
}

TEST_CASE("discovery is a set union across honeypots") {
    SoapFixture fx(40);
    fx.raise_botnet(30);
    Policy policy;
    policy.p_detect = 0.0;
    Defender defender(fx.swarm, fx.rng, policy);

    const std::uint32_t pot_a = defender.plant_honeypot(fx.now);
    const auto peers_a = fx.swarm.actor(pot_a).peers.entries();
    const std::uint32_t pot_b = defender.plant_honeypot(fx.now);
    const auto peers_b = fx.swarm.actor(pot_b).peers.entries();
    REQUIRE_FALSE(peers_a.empty());
    REQUIRE_FALSE(peers_b.empty());

    // everything either pot saw directly is in the shared discovered set
    for (const auto& addr : peers_a) CHECK(defender.discovered().count(addr));
    for (const auto& addr : peers_b) {
        if (addr == fx.swarm.actor(pot_a).onion) continue;  // pots are not bots
        CHECK(defender.discovered().count(addr));
    }
}
