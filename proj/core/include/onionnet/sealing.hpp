#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace onionnet {

using Bytes = std::vector<std::uint8_t>;
using SymKey = std::array<std::uint8_t, 16>;

// Keyed, tagged, invertible sealing used for onion layers, command
// signatures and end-to-end session wrapping. It is a simulation stand-in
// with the interface contract of an authenticated cipher: sealing with a key
// and unsealing with the same key round-trips, unsealing with any other key
// fails tag verification. It has no cryptographic strength.

std::uint64_t fnv1a64(std::span<const std::uint8_t> data, std::uint64_t basis = 1469598103934665603ULL);

// 64-bit keyed checksum over (key || len || data).
std::uint64_t checksum64(std::span<const std::uint8_t> key, std::span<const std::uint8_t> data);

// Layout: [tag: 8 bytes big-endian][data xor keystream(key)].
Bytes seal(const SymKey& key, std::span<const std::uint8_t> plain);

// Throws TagVerificationError when the key does not match.
Bytes unseal(const SymKey& key, std::span<const std::uint8_t> sealed);

}  // namespace onionnet
