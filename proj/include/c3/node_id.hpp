#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <functional>
#include <span>
#include <string>
#include <string_view>

namespace c3 {

class RngStream;

using Digest256 = std::array<std::uint8_t, 32>;

Digest256 sha256(std::span<const std::uint8_t> bytes);
Digest256 sha256(std::string_view text);

/// 256-bit node identity. Equality and ordering are bytewise.
class NodeId {
public:
    constexpr NodeId() = default;
    explicit constexpr NodeId(const Digest256& bytes) : bytes_(bytes) {}

    const Digest256& bytes() const noexcept { return bytes_; }
    static constexpr std::size_t bit_width() noexcept { return 256; }

    std::string hex() const;
    /// First 8 hex digits, for diagnostics only.
    std::string short_hex() const { return hex().substr(0, 8); }
    static NodeId from_hex(std::string_view hex);

    /// Reserved all-zero identity of the currency issuer (mint/burn sink).
    static constexpr NodeId issuer() noexcept { return NodeId{}; }
    bool is_issuer() const noexcept { return *this == issuer(); }

    /// Synthetic identity for a non-node actor (e.g. a service developer).
    static NodeId named(std::string_view name);

    auto operator<=>(const NodeId&) const = default;
    bool operator==(const NodeId&) const = default;

private:
    Digest256 bytes_{};
};

struct NodeIdHash {
    std::size_t operator()(const NodeId& id) const noexcept {
        std::size_t h;
        std::memcpy(&h, id.bytes().data(), sizeof h);
        return h;
    }
};

/// Draws a private key from the stream, derives its public key, and hashes
/// the public key into the identity.
NodeId generate_identity(RngStream& rng);

/// Hash over the sorted identities of a node's current neighbours.
struct PositionFingerprint {
    Digest256 digest{};
    bool operator==(const PositionFingerprint&) const = default;
};

PositionFingerprint fingerprint_of(std::span<const NodeId> neighbours);

}  // namespace c3
