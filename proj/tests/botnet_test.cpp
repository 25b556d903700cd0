#include <doctest.h>

#include <map>
#include <set>

#include "onionnet/botnet.hpp"
#include "onionnet/errors.hpp"
#include "oracles.hpp"

using namespace onionnet;
using namespace onionnet::botnet;

namespace {

// Network + swarm fixture with `bots` infected, bootstrapped hosts.
struct Fixture {
    Rng rng;
    overlay::Network network;
    Transcript transcript;
    SwarmParams params;
    Swarm swarm;
    Botmaster master;
    SimTime now = 0;

    explicit Fixture(std::uint32_t hosts, SwarmParams p = {}, std::uint64_t seed = 1234)
        : rng(seed), params(p), swarm(network, rng, p, transcript) {
        for (std::uint32_t i = 0; i < 12; ++i) network.add_relay();
        for (std::uint32_t i = 0; i < hosts; ++i) swarm.add_host();
        master.node = network.add_node();
        auto [keys, onion] = network.issue_identity(rng);
        master.keys = std::move(keys);
        master.onion = std::move(onion);
        network.bind_onion(master.onion, master.node);
    }

    // Infect the first n hosts and wire them into a connected overlay.
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
        // A few update rounds let tables mix beyond the hardcoded seeds.
        for (int round = 0; round < 4; ++round) {
            now += params.update_period;
            for (std::uint32_t i = 0; i < n; ++i) swarm.update_peers(i, now);
        }
    }

    oracle::PeerGraph graph_snapshot() const {
        oracle::PeerGraph graph;
        for (std::uint32_t i = 0; i < swarm.actor_count(); ++i) {
            const Actor& actor = swarm.actor(i);
            if (actor.onion.empty()) continue;
            auto& edges = graph.edges[actor.onion.value];
            for (const auto& peer : actor.peers.entries()) edges.push_back(peer.value);
            if (actor.kind != ActorKind::Bot) {
                graph.absorbing.insert(actor.onion.value);
            } else if (actor.phase == Phase::Waiting || actor.phase == Phase::Executing) {
                graph.connected.insert(actor.onion.value);
            }
        }
        return graph;
    }
};

overlay::OnionAddress addr(const char* s) { return overlay::OnionAddress{s}; }

}  // namespace

TEST_CASE("peer table keeps the freshest k entries, no self, no duplicates") {
    PeerTable table(3);
    const auto self = addr("selfselfselfself");
    table.confirm(addr("aaaa"), self);
    table.confirm(addr("bbbb"), self);
    table.confirm(addr("cccc"), self);
    table.confirm(addr("dddd"), self);  // evicts aaaa
    CHECK(table.size() == 3);
    CHECK_FALSE(table.contains(addr("aaaa")));
    CHECK(table.entries().front() == addr("dddd"));

    table.confirm(addr("bbbb"), self);  // refresh moves to front, no dup
    CHECK(table.size() == 3);
    CHECK(table.entries().front() == addr("bbbb"));

    table.confirm(self, self);  // never the owner's own address
    CHECK_FALSE(table.contains(self));
}

TEST_CASE("try_infect respects beta and the state guard") {
    Fixture fx(10);
    fx.swarm.seed_infection(0, 0);

    SUBCASE("beta=0 never infects") {
        for (int i = 0; i < 50; ++i) CHECK_FALSE(fx.swarm.try_infect(0, 1, 0.0, 1));
        CHECK(fx.swarm.actor(1).phase == Phase::Susceptible);
    }
    SUBCASE("beta=1 always infects a susceptible target") {
        CHECK(fx.swarm.try_infect(0, 1, 1.0, 1));
        CHECK(fx.swarm.actor(1).phase == Phase::Rally);
        CHECK_FALSE(fx.swarm.actor(1).onion.empty());
    }
    SUBCASE("an already-connected target is left alone") {
        REQUIRE(fx.swarm.try_infect(0, 1, 1.0, 1));
        fx.swarm.set_phase(1, Phase::Waiting, 1);
        CHECK_FALSE(fx.swarm.try_infect(0, 1, 1.0, 2));
        CHECK(fx.swarm.actor(1).phase == Phase::Waiting);
    }
}

TEST_CASE("bootstrap joins through live hardcoded peers") {
    Fixture fx(6);
    for (std::uint32_t i = 0; i < 4; ++i) fx.swarm.seed_infection(i, 0);
    // peers 1..3 are connected already
    std::vector<overlay::OnionAddress> hardcoded;
    for (std::uint32_t i = 1; i < 4; ++i) {
        fx.swarm.set_phase(i, Phase::Waiting, 0);
        hardcoded.push_back(fx.swarm.actor(i).onion);
    }
    fx.swarm.set_hardcoded_peers(hardcoded);

    SUBCASE("all alive: at least one peer confirmed, bot waiting") {
        CHECK(fx.swarm.bootstrap(0, 1) == BootstrapOutcome::Joined);
        CHECK(fx.swarm.actor(0).phase == Phase::Waiting);
        CHECK(fx.swarm.actor(0).peers.size() >= 1);
        CHECK(fx.swarm.actor(0).peers.size() <= 3);
    }
    SUBCASE("all hardcoded peers dead: exhausted, still rallying") {
        for (std::uint32_t i = 1; i < 4; ++i) fx.network.set_alive(fx.swarm.actor(i).node, false);
        CHECK(fx.swarm.bootstrap(0, 1) == BootstrapOutcome::Exhausted);
        CHECK(fx.swarm.actor(0).phase == Phase::Rally);
        CHECK(fx.swarm.actor(0).peers.empty());
    }
    SUBCASE("own address in the shipped list is filtered out") {
        auto with_self = hardcoded;
        with_self.insert(with_self.begin(), fx.swarm.actor(0).onion);
        fx.swarm.set_hardcoded_peers(with_self);
        CHECK(fx.swarm.bootstrap(0, 1) == BootstrapOutcome::Joined);
        CHECK_FALSE(fx.swarm.actor(0).peers.contains(fx.swarm.actor(0).onion));
    }
}

TEST_CASE("update_peers merges, trims and drops the dead") {
    SwarmParams params;
    params.peer_capacity = 8;
    Fixture fx(20, params);
    fx.raise_botnet(12);

    SUBCASE("table never exceeds k and holds only onion addresses") {
        for (std::uint32_t i = 0; i < 12; ++i) {
            const auto& actor = fx.swarm.actor(i);
            CHECK(actor.peers.size() <= 8);
            for (const auto& entry : actor.peers.entries()) {
                CHECK(entry.value.size() == 16);
                // no dotted-quad can hide in a base32 string, but scan anyway
                CHECK(entry.value.find('.') == std::string::npos);
            }
        }
    }

    SUBCASE("all peers unresponsive: table empties and the bot re-rallies") {
        // Kill every node the bot knows.
        const auto& entries = fx.swarm.actor(0).peers.entries();
        REQUIRE_FALSE(entries.empty());
        for (const auto& entry : entries) {
            const auto idx = fx.swarm.actor_by_onion(entry);
            REQUIRE(idx);
            fx.network.set_alive(fx.swarm.actor(*idx).node, false);
        }
        fx.swarm.update_peers(0, fx.now + 60);
        CHECK(fx.swarm.actor(0).peers.empty());
        CHECK(fx.swarm.actor(0).phase == Phase::Rally);
    }

    SUBCASE("advertised addresses grow a short table up to k") {
        // fresh bot whose only peer advertises a full table
        const std::uint32_t newcomer = 15;
        fx.swarm.seed_infection(newcomer, fx.now);
        std::vector<overlay::OnionAddress> one{fx.swarm.actor(0).onion};
        fx.swarm.set_hardcoded_peers(one);
        REQUIRE(fx.swarm.bootstrap(newcomer, fx.now + 1) == BootstrapOutcome::Joined);
        const auto before = fx.swarm.actor(newcomer).peers.size();
        fx.swarm.update_peers(newcomer, fx.now + 60);
        const auto after = fx.swarm.actor(newcomer).peers.size();
        CHECK(after >= before);
        CHECK(after <= 8);
        CHECK(after > 1);  // picked up advertised entries beyond its one peer
    }
}

TEST_CASE("command flood covers exactly the reachable set") {
    SwarmParams params;
    Fixture fx(60, params);
    fx.raise_botnet(50);

    const oracle::PeerGraph graph = fx.graph_snapshot();
    const Command cmd = fx.master.issue(DdosTask{"victim", 2, 3}, fx.now);
    const PushResult result = fx.swarm.push_command(fx.master, cmd, fx.now);

    REQUIRE_FALSE(fx.transcript.pushes.empty());
    const auto& push = fx.transcript.pushes.back();
    const std::set<std::string> expected = oracle::reachable_bots(graph, push.seeds);

    std::set<std::string> seen;
    for (const auto& d : fx.transcript.deliveries) {
        if (d.command == cmd.id) seen.insert(d.onion);
    }
    REQUIRE_FALSE(seen.empty());
    CHECK(seen == expected);
    CHECK(result.accepted == seen.size());

    // on a connected overlay the flood reaches every connected bot
    std::uint32_t connected = 0;
    for (std::uint32_t i = 0; i < 50; ++i) {
        const auto phase = fx.swarm.actor(i).phase;
        if (phase == Phase::Waiting || phase == Phase::Executing) ++connected;
    }
    CHECK(seen.size() == connected);
}

TEST_CASE("a corrupted signature is dropped by every bot") {
    Fixture fx(30);
    fx.raise_botnet(20);
    Command cmd = fx.master.issue(DdosTask{"victim", 2, 3}, fx.now);
    cmd.signature ^= 0x1;  // one flipped bit
    const PushResult result = fx.swarm.push_command(fx.master, cmd, fx.now);
    CHECK(result.accepted == 0);
    CHECK(result.started.empty());
    CHECK(fx.transcript.executions.empty());
}

TEST_CASE("duplicate command ids are executed and forwarded once") {
    Fixture fx(30);
    fx.raise_botnet(20);
    const Command cmd = fx.master.issue(DdosTask{"victim", 1, 2}, fx.now);
    fx.swarm.push_command(fx.master, cmd, fx.now);
    fx.swarm.push_command(fx.master, cmd, fx.now);  // same id pushed again

    std::map<std::string, int> forwards_per_bot;
    for (const auto& f : fx.transcript.forwards) {
        if (f.command == cmd.id) ++forwards_per_bot[f.onion];
    }
    for (const auto& [onion, count] : forwards_per_bot) CHECK(count == 1);

    std::map<std::string, int> executions_per_bot;
    for (const auto& e : fx.transcript.executions) {
        if (e.command == cmd.id) ++executions_per_bot[e.onion];
    }
    for (const auto& [onion, count] : executions_per_bot) CHECK(count == 1);
}

TEST_CASE("ddos task emits exactly rate x duration events") {
    Fixture fx(5);
    fx.swarm.seed_infection(0, 0);
    fx.swarm.seed_infection(1, 0);
    fx.swarm.set_phase(1, Phase::Waiting, 0);
    std::vector<overlay::OnionAddress> hardcoded{fx.swarm.actor(1).onion};
    fx.swarm.set_hardcoded_peers(hardcoded);
    fx.swarm.bootstrap(0, 1);
    REQUIRE(fx.swarm.actor(0).phase == Phase::Waiting);

    const Command cmd = fx.master.issue(DdosTask{"victim", 5, 10}, 1);
    const auto plan = fx.swarm.execute(0, cmd, 1);
    REQUIRE(plan.size() == 10);

    std::vector<AttackEvent> events;
    for (const auto& burst : plan) {
        fx.swarm.attack_tick(0, AttackBurst{cmd.id, burst.events, burst.final_tick}, cmd,
                             burst.time, events);
    }
    CHECK(events.size() == 50);
    CHECK(fx.swarm.actor(0).phase == Phase::Waiting);  // back after the final tick
    for (const auto& ev : events) {
        CHECK(ev.source == fx.swarm.actor(0).onion);
        CHECK(ev.target == "victim");
    }
}

TEST_CASE("neutralized bots emit nothing") {
    Fixture fx(5);
    fx.swarm.seed_infection(0, 0);
    fx.swarm.set_phase(0, Phase::Waiting, 0);
    const Command cmd = fx.master.issue(DdosTask{"victim", 5, 10}, 1);
    const auto plan = fx.swarm.execute(0, cmd, 1);
    REQUIRE_FALSE(plan.empty());
    fx.swarm.set_phase(0, Phase::Neutralized, 2);  // mid-task takedown

    std::vector<AttackEvent> events;
    for (const auto& burst : plan) {
        fx.swarm.attack_tick(0, AttackBurst{cmd.id, burst.events, burst.final_tick}, cmd,
                             burst.time, events);
    }
    CHECK(events.empty());
}

TEST_CASE("zero-duration tasks return to waiting immediately") {
    Fixture fx(5);
    fx.swarm.seed_infection(0, 0);
    fx.swarm.set_phase(0, Phase::Waiting, 0);
    const Command cmd = fx.master.issue(DdosTask{"victim", 5, 0}, 1);
    const auto plan = fx.swarm.execute(0, cmd, 1);
    CHECK(plan.empty());
    CHECK(fx.swarm.actor(0).phase == Phase::Waiting);
}

TEST_CASE("every transition in a run transcript is legal") {
    Fixture fx(40);
    fx.raise_botnet(30);
    const Command cmd = fx.master.issue(DdosTask{"victim", 1, 1}, fx.now);
    const auto result = fx.swarm.push_command(fx.master, cmd, fx.now);
    for (const auto& started : result.started) {
        for (const auto& burst : started.plan) {
            std::vector<AttackEvent> sink;
            fx.swarm.attack_tick(started.bot, AttackBurst{cmd.id, burst.events, burst.final_tick},
                                 cmd, burst.time, sink);
        }
    }

    auto parse = [](const std::string& name) {
        if (name == "Susceptible") return Phase::Susceptible;
        if (name == "Rally") return Phase::Rally;
        if (name == "Waiting") return Phase::Waiting;
        if (name == "Executing") return Phase::Executing;
        return Phase::Neutralized;
    };
    REQUIRE_FALSE(fx.transcript.transitions.empty());
    for (const auto& tr : fx.transcript.transitions) {
        CHECK(legal_transition(parse(tr.from), parse(tr.to)));
    }
}

TEST_CASE("illegal transitions are refused") {
    Fixture fx(3);
    fx.swarm.seed_infection(0, 0);
    fx.swarm.set_phase(0, Phase::Waiting, 0);
    fx.swarm.set_phase(0, Phase::Neutralized, 1);
    CHECK_THROWS_AS(fx.swarm.set_phase(0, Phase::Waiting, 2), SimError);  // absorbing
    CHECK(fx.swarm.actor(0).phase == Phase::Neutralized);
}

TEST_CASE("command signatures verify against the issuing key only") {
    Fixture fx(3);
    const Command cmd = fx.master.issue(SpamTask{40, 10}, 5);
    CHECK(cmd.verify(fx.master.keys.public_key));
    Botmaster other;
    other.keys = overlay::KeyPair::generate(fx.rng);
    CHECK_FALSE(cmd.verify(other.keys.public_key));
}

TEST_CASE("spam tasks spread volume over the window") {
    Fixture fx(5);
    fx.swarm.seed_infection(0, 0);
    fx.swarm.set_phase(0, Phase::Waiting, 0);
    const Command cmd = fx.master.issue(SpamTask{40, 10}, 1);
    const auto plan = fx.swarm.execute(0, cmd, 1);
    REQUIRE_FALSE(plan.empty());
    std::uint64_t total = 0;
    std::vector<AttackEvent> events;
    for (const auto& burst : plan) {
        CHECK(burst.time >= 1);
        CHECK(burst.time < 1 + 10);
        total += burst.events;
        fx.swarm.attack_tick(0, AttackBurst{cmd.id, burst.events, burst.final_tick}, cmd,
                             burst.time, events);
    }
    CHECK(total == 40);
    CHECK(events.size() == 40);
    CHECK(fx.swarm.actor(0).phase == Phase::Waiting);
}
