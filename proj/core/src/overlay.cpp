#include "onionnet/overlay.hpp"

#include <algorithm>
#include <set>

#include "onionnet/errors.hpp"

namespace onionnet::overlay {

namespace {

constexpr char kBase32Alphabet[] = "abcdefghijklmnopqrstuvwxyz234567";
constexpr std::uint32_t kDeliverMarker = 0xFFFFFFFF;

SymKey fresh_key(Rng& rng) {
    SymKey key;
    const auto raw = rng.bytes(key.size());
    std::copy(raw.begin(), raw.end(), key.begin());
    return key;
}

void put_u32_be(Bytes& out, std::uint32_t value) {
    for (int shift = 24; shift >= 0; shift -= 8) {
        out.push_back(static_cast<std::uint8_t>(value >> shift));
    }
}

std::uint32_t read_u32_be(std::span<const std::uint8_t> in) {
    std::uint32_t value = 0;
    for (std::size_t i = 0; i < 4; ++i) value = (value << 8) | in[i];
    return value;
}

}  // namespace

KeyPair KeyPair::generate(Rng& rng) {
    KeyPair pair;
    pair.private_key = rng.bytes(32);
    // Public key = keyed digest of the private key, stretched to 32 bytes.
    pair.public_key.reserve(32);
    std::uint64_t h = fnv1a64(pair.private_key);
    for (int block = 0; block < 4; ++block) {
        h = fnv1a64(pair.private_key, h + static_cast<std::uint64_t>(block) + 1);
        for (int i = 0; i < 8; ++i) {
            pair.public_key.push_back(static_cast<std::uint8_t>(h >> (i * 8)));
        }
    }
    return pair;
}

OnionAddress derive_onion_address(std::span<const std::uint8_t> public_key) {
    if (public_key.empty()) throw SimError("onion address requires a non-empty public key");
    // 80 bits of key digest -> 16 base32 characters.
    const std::uint64_t h1 = fnv1a64(public_key, 0xcbf29ce484222325ULL);
    const std::uint64_t h2 = fnv1a64(public_key, h1 ^ 0x9E3779B97F4A7C15ULL);
    unsigned __int128 bits = (static_cast<unsigned __int128>(h2 & 0xFFFF) << 64) | h1;
    OnionAddress addr;
    addr.value.resize(16);
    for (int i = 15; i >= 0; --i) {
        addr.value[static_cast<std::size_t>(i)] = kBase32Alphabet[static_cast<std::size_t>(bits & 0x1F)];
        bits >>= 5;
    }
    return addr;
}

Circuit build_circuit(Rng& rng, NodeId source, const std::vector<NodeId>& relays, CircuitRole role) {
    if (relays.empty()) throw EmptyRelayListError{};
    std::set<NodeId> seen;
    for (NodeId relay : relays) {
        if (relay == source) throw DuplicateRelayError("relay equals circuit source");
        if (!seen.insert(relay).second) throw DuplicateRelayError("relay appears twice in circuit");
    }
    Circuit circuit;
    circuit.role = role;
    circuit.hops.reserve(relays.size());
    for (NodeId relay : relays) {
        circuit.hops.push_back(CircuitHop{relay, fresh_key(rng)});
    }
    circuit.endpoint_key = fresh_key(rng);
    return circuit;
}

std::string Envelope::hex() const {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(blob.size() * 2);
    for (std::uint8_t byte : blob) {
        out.push_back(digits[byte >> 4]);
        out.push_back(digits[byte & 0xF]);
    }
    return out;
}

Envelope wrap(std::span<const std::uint8_t> payload, const Circuit& circuit) {
    // Innermost layer first: delivery marker and the payload, keyed to the
    // terminal hop. Each outer layer names its successor so a relay learns
    // nothing beyond the next node.
    Bytes plain;
    plain.reserve(payload.size() + 4);
    put_u32_be(plain, kDeliverMarker);
    plain.insert(plain.end(), payload.begin(), payload.end());
    Bytes blob = seal(circuit.hops.back().key, plain);

    for (std::size_t i = circuit.hops.size() - 1; i-- > 0;) {
        Bytes layer;
        layer.reserve(blob.size() + 4);
        put_u32_be(layer, circuit.hops[i + 1].node.value);
        layer.insert(layer.end(), blob.begin(), blob.end());
        blob = seal(circuit.hops[i].key, layer);
    }
    return Envelope{std::move(blob)};
}

Peeled peel(const Envelope& envelope, const SymKey& key) {
    Bytes plain = unseal(key, envelope.blob);
    if (plain.size() < 4) throw TagVerificationError{};
    Peeled result;
    const std::uint32_t next = read_u32_be(plain);
    result.data.assign(plain.begin() + 4, plain.end());
    if (next == kDeliverMarker) {
        result.deliver = true;
    } else {
        result.next = NodeId{next};
    }
    return result;
}

Circuit reverse_path(const Circuit& circuit, NodeId owner) {
    Circuit back;
    back.role = circuit.role;
    back.endpoint_key = circuit.endpoint_key;
    // Walk back from the relay before the terminal toward the owner.
    for (std::size_t i = circuit.hops.size() - 1; i-- > 0;) {
        back.hops.push_back(circuit.hops[i]);
    }
    back.hops.push_back(CircuitHop{owner, circuit.endpoint_key});
    return back;
}

NodeId Network::add_node() {
    NodeId id{static_cast<std::uint32_t>(nodes_.size())};
    // Simulated address space 10.x.y.z, unique per node.
    const std::uint32_t n = id.value;
    Node node;
    node.ip = "10." + std::to_string((n >> 16) & 0xFF) + "." + std::to_string((n >> 8) & 0xFF) + "." +
              std::to_string(n & 0xFF);
    nodes_.push_back(std::move(node));
    return id;
}

NodeId Network::add_relay() {
    NodeId id = add_node();
    relays_.push_back(id);
    return id;
}

std::pair<KeyPair, OnionAddress> Network::issue_identity(Rng& rng) {
    for (;;) {
        KeyPair pair = KeyPair::generate(rng);
        OnionAddress onion = derive_onion_address(pair.public_key);
        if (onion_directory_.find(onion.value) == onion_directory_.end()) {
            return {std::move(pair), std::move(onion)};
        }
        // collision: regenerate
    }
}

void Network::bind_onion(const OnionAddress& onion, NodeId node) {
    onion_directory_[onion.value] = node;
}

void Network::unbind_onion(const OnionAddress& onion) {
    onion_directory_.erase(onion.value);
}

std::optional<NodeId> Network::resolve(const OnionAddress& onion) const {
    const auto it = onion_directory_.find(onion.value);
    if (it == onion_directory_.end()) return std::nullopt;
    return it->second;
}

std::vector<NodeId> Network::pick_relays(Rng& rng, std::size_t n,
                                         std::initializer_list<NodeId> exclude) const {
    std::vector<NodeId> candidates;
    candidates.reserve(relays_.size());
    for (NodeId relay : relays_) {
        if (!alive(relay)) continue;
        bool excluded = false;
        for (NodeId e : exclude) {
            if (relay == e) { excluded = true; break; }
        }
        if (!excluded) candidates.push_back(relay);
    }
    if (candidates.size() < n) throw SimError("relay pool too small for requested circuit");
    const auto picks = rng.sample_indices(static_cast<std::uint32_t>(candidates.size()),
                                          static_cast<std::uint32_t>(n));
    std::vector<NodeId> out;
    out.reserve(n);
    for (auto idx : picks) out.push_back(candidates[idx]);
    return out;
}

RouteResult Network::route(Rng& rng, NodeId sender, const Envelope& envelope, const Circuit& circuit,
                           LatencyRange latency) const {
    RouteResult result;
    result.trace.degenerate_single_hop = circuit.hops.size() == 1;
    Envelope current = envelope;
    NodeId predecessor = sender;

    for (std::size_t i = 0; i < circuit.hops.size(); ++i) {
        const CircuitHop& hop = circuit.hops[i];
        result.trace.latency += rng.uniform(latency.min, latency.max);

        if (!alive(hop.node)) {
            result.trace.dropped_at = hop.node;
            return result;
        }

        Peeled layer = peel(current, hop.key);
        RelayObservation obs;
        obs.relay = hop.node;
        obs.observed.push_back(predecessor);
        if (!layer.deliver) {
            obs.observed.push_back(layer.next);
        } else if (result.trace.degenerate_single_hop) {
            // Sole relay: it is also the delivery point and sees both ends.
            obs.observed.push_back(hop.node);
        }
        result.trace.relays.push_back(std::move(obs));

        if (layer.deliver) {
            result.trace.delivered = true;
            result.payload = std::move(layer.data);
            return result;
        }
        if (layer.next != circuit.hops[i + 1].node) {
            throw SimError("envelope successor does not match circuit hop");
        }
        current = Envelope{std::move(layer.data)};
        predecessor = hop.node;
    }
    throw SimError("circuit exhausted without delivery marker");
}

Session rendezvous_connect(Session::Endpoint client, Session::Endpoint service, NodeId rendezvous,
                           Rng& rng) {
    if (client.circuit.terminal() != rendezvous || service.circuit.terminal() != rendezvous) {
        throw RendezvousMismatchError{};
    }
    Session session;
    session.client_ = std::move(client);
    session.service_ = std::move(service);
    session.rendezvous_ = rendezvous;
    const auto raw = rng.bytes(session.session_key_.size());
    std::copy(raw.begin(), raw.end(), session.session_key_.begin());
    return session;
}

Bytes Session::send(Side from, std::span<const std::uint8_t> payload, const Network& network, Rng& rng,
                    LatencyRange latency, std::vector<DeliveryTrace>* traces,
                    std::vector<std::string>* wire) {
    const Endpoint& origin = (from == Side::Client) ? client_ : service_;
    const Endpoint& target = (from == Side::Client) ? service_ : client_;

    // End-to-end seal first; the rendezvous relay forwards it opaquely.
    const Bytes inner = seal(session_key_, payload);

    // Leg 1: origin -> rendezvous over the origin's own circuit.
    Envelope out = wrap(inner, origin.circuit);
    if (wire) wire->push_back(out.hex());
    RouteResult leg1 = network.route(rng, origin.node, out, origin.circuit, latency);
    if (traces) traces->push_back(leg1.trace);
    if (!leg1.trace.delivered) throw SimError("session leg lost: relay down");

    // Leg 2: rendezvous -> target along the target circuit's reverse path.
    const Circuit back = reverse_path(target.circuit, target.node);
    Envelope in = wrap(*leg1.payload, back);
    if (wire) wire->push_back(in.hex());
    RouteResult leg2 = network.route(rng, rendezvous_, in, back, latency);
    if (traces) traces->push_back(leg2.trace);
    if (!leg2.trace.delivered) throw SimError("session leg lost: relay down");

    return unseal(session_key_, *leg2.payload);
}

std::string Session::transcript_line() const {
    return "session client=" + client_.onion.value + " service=" + service_.onion.value +
           " rendezvous=relay#" + std::to_string(rendezvous_.value);
}

}  // namespace onionnet::overlay
