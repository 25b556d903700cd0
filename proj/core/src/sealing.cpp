#include "onionnet/sealing.hpp"

#include "onionnet/errors.hpp"

namespace onionnet {

namespace {

constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

void xor_keystream(const SymKey& key, std::span<std::uint8_t> data) {
    std::uint64_t state = checksum64(key, {reinterpret_cast<const std::uint8_t*>("ks"), 2});
    std::uint64_t word = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (i % 8 == 0) word = splitmix64(state);
        data[i] ^= static_cast<std::uint8_t>(word >> ((i % 8) * 8));
    }
}

void put_u64_be(Bytes& out, std::uint64_t value) {
    for (int shift = 56; shift >= 0; shift -= 8) {
        out.push_back(static_cast<std::uint8_t>(value >> shift));
    }
}

std::uint64_t read_u64_be(std::span<const std::uint8_t> in) {
    std::uint64_t value = 0;
    for (std::size_t i = 0; i < 8; ++i) value = (value << 8) | in[i];
    return value;
}

}  // namespace

std::uint64_t fnv1a64(std::span<const std::uint8_t> data, std::uint64_t basis) {
    std::uint64_t h = basis;
    for (std::uint8_t byte : data) {
        h ^= byte;
        h *= kFnvPrime;
    }
    return h;
}

std::uint64_t checksum64(std::span<const std::uint8_t> key, std::span<const std::uint8_t> data) {
    std::uint64_t h = fnv1a64(key);
    const std::uint64_t len = data.size();
    for (std::size_t i = 0; i < 8; ++i) {
        h ^= static_cast<std::uint8_t>(len >> (i * 8));
        h *= kFnvPrime;
    }
    return fnv1a64(data, h);
}

Bytes seal(const SymKey& key, std::span<const std::uint8_t> plain) {
    Bytes out;
    out.reserve(plain.size() + 8);
    put_u64_be(out, checksum64(key, plain));
    out.insert(out.end(), plain.begin(), plain.end());
    xor_keystream(key, std::span<std::uint8_t>(out).subspan(8));
    return out;
}

Bytes unseal(const SymKey& key, std::span<const std::uint8_t> sealed) {
    if (sealed.size() < 8) throw TagVerificationError{};
    Bytes plain(sealed.begin() + 8, sealed.end());
    xor_keystream(key, plain);
    if (checksum64(key, plain) != read_u64_be(sealed)) throw TagVerificationError{};
    return plain;
}

}  // namespace onionnet
