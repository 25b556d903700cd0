#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "onionnet/engine.hpp"
#include "onionnet/rng.hpp"
#include "onionnet/sealing.hpp"

namespace onionnet::overlay {

// Index into the network's node table. The node's simulated IP lives in the
// node record only; it must never travel inside envelopes or peer tables.
struct NodeId {
    static constexpr std::uint32_t kInvalid = 0xFFFFFFFF;
    std::uint32_t value = kInvalid;

    bool valid() const { return value != kInvalid; }
    auto operator<=>(const NodeId&) const = default;
};

struct KeyPair {
    Bytes public_key;
    Bytes private_key;

    // 32-byte private key, public key derived from it.
    static KeyPair generate(Rng& rng);
};

// 16-char base32 service identifier, a pure function of the public key.
struct OnionAddress {
    std::string value;

    bool empty() const { return value.empty(); }
    auto operator<=>(const OnionAddress&) const = default;
};

OnionAddress derive_onion_address(std::span<const std::uint8_t> public_key);

enum class CircuitRole { ClientSide, ServiceSide };

struct CircuitHop {
    NodeId node;
    SymKey key;
};

struct Circuit {
    std::vector<CircuitHop> hops;
    CircuitRole role = CircuitRole::ClientSide;
    // Held by the circuit builder; keys the extra delivery layer on the
    // reverse path (rendezvous -> builder).
    SymKey endpoint_key{};

    NodeId terminal() const { return hops.back().node; }
    NodeId introduction_point() const { return hops.front().node; }
};

// Relays must be distinct and must not include the source. One fresh
// symmetric key per hop. Throws EmptyRelayList / DuplicateRelay.
Circuit build_circuit(Rng& rng, NodeId source, const std::vector<NodeId>& relays, CircuitRole role);

// Layered envelope. Each layer decodes under exactly one hop key to
// (successor, inner); the innermost layer carries the delivery marker.
struct Envelope {
    Bytes blob;

    std::string hex() const;
};

struct Peeled {
    bool deliver = false;  // true at the innermost layer
    NodeId next;           // successor when deliver == false
    Bytes data;            // inner envelope blob, or the payload at delivery
};

Envelope wrap(std::span<const std::uint8_t> payload, const Circuit& circuit);
Peeled peel(const Envelope& envelope, const SymKey& key);  // throws TagVerificationError

// The reverse path of a service-side circuit: relays in reverse order with
// their negotiated keys, terminated by the circuit owner under endpoint_key.
Circuit reverse_path(const Circuit& circuit, NodeId owner);

struct RelayObservation {
    NodeId relay;
    std::vector<NodeId> observed;  // identities this relay saw: predecessor / successor only
};

struct DeliveryTrace {
    std::vector<RelayObservation> relays;
    bool delivered = false;
    SimTime latency = 0;                // summed per-hop latency draws
    std::optional<NodeId> dropped_at;   // set when a hop was down mid-route
    bool degenerate_single_hop = false; // one relay sees both endpoints
};

struct RouteResult {
    DeliveryTrace trace;
    std::optional<Bytes> payload;  // present when delivered
};

struct LatencyRange {
    SimTime min = 0;
    SimTime max = 0;
};

// Node registry: identities, liveness, the relay pool and the onion service
// directory. Everything is plain state mutated from the engine loop.
class Network {
public:
    NodeId add_node();
    NodeId add_relay();

    std::size_t node_count() const { return nodes_.size(); }
    std::size_t relay_count() const { return relays_.size(); }
    const std::vector<NodeId>& relays() const { return relays_; }

    const std::string& ip_of(NodeId id) const { return nodes_.at(id.value).ip; }
    bool alive(NodeId id) const { return id.valid() && id.value < nodes_.size() && nodes_[id.value].alive; }
    void set_alive(NodeId id, bool up) { nodes_.at(id.value).alive = up; }

    // Collision-free within a run: redraws the keypair on an address clash.
    std::pair<KeyPair, OnionAddress> issue_identity(Rng& rng);
    void bind_onion(const OnionAddress& onion, NodeId node);
    void unbind_onion(const OnionAddress& onion);
    std::optional<NodeId> resolve(const OnionAddress& onion) const;

    // n distinct live relays, excluding the listed nodes.
    std::vector<NodeId> pick_relays(Rng& rng, std::size_t n, std::initializer_list<NodeId> exclude) const;

    // Walks the circuit hop by hop, peeling one layer per relay, recording
    // what each relay observed and summing per-hop latency draws. A dead hop
    // drops the message and is recorded in the trace.
    RouteResult route(Rng& rng, NodeId sender, const Envelope& envelope, const Circuit& circuit,
                      LatencyRange latency) const;

private:
    struct Node {
        std::string ip;
        bool alive = true;
    };

    std::vector<Node> nodes_;
    std::vector<NodeId> relays_;
    std::unordered_map<std::string, NodeId> onion_directory_;
};

// A rendezvous-joined pair of circuits. Each endpoint knows the rendezvous
// relay and the far side's onion address; neither ever sees the far side's
// node record. Payloads cross under an end-to-end key the rendezvous relay
// cannot remove.
class Session {
public:
    struct Endpoint {
        NodeId node;
        OnionAddress onion;
        Circuit circuit;
    };

    enum class Side { Client, Service };

    // Sends payload from one side to the other through the rendezvous relay
    // and returns it as decoded by the far endpoint. Traces of both legs are
    // appended to `traces`; the hex of both envelopes to `wire` when given.
    Bytes send(Side from, std::span<const std::uint8_t> payload, const Network& network, Rng& rng,
               LatencyRange latency, std::vector<DeliveryTrace>* traces = nullptr,
               std::vector<std::string>* wire = nullptr);

    const OnionAddress& client_onion() const { return client_.onion; }
    const OnionAddress& service_onion() const { return service_.onion; }
    NodeId rendezvous() const { return rendezvous_; }

    // What an observer of the session join records: onion addresses and the
    // rendezvous relay index only.
    std::string transcript_line() const;

private:
    friend Session rendezvous_connect(Endpoint client, Endpoint service, NodeId rendezvous, Rng& rng);

    Endpoint client_;
    Endpoint service_;
    NodeId rendezvous_;
    SymKey session_key_{};
};

// Both circuits must terminate at `rendezvous`; throws RendezvousMismatch.
Session rendezvous_connect(Session::Endpoint client, Session::Endpoint service, NodeId rendezvous, Rng& rng);

}  // namespace onionnet::overlay
