#include "c3/node_id.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <vector>

#include "c3/error.hpp"
#include "c3/rng.hpp"

namespace c3 {

Digest256 sha256(std::span<const std::uint8_t> bytes) {
    Digest256 out{};
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 || len != out.size()) {
        throw std::runtime_error("sha256 failed");
    }
    return out;
}

Digest256 sha256(std::string_view text) {
    return sha256(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string NodeId::hex() const {
    static constexpr char digits[] = "0123456789abcdef";
    std::string s(64, '0');
    for (std::size_t i = 0; i < bytes_.size(); ++i) {
        s[2 * i] = digits[bytes_[i] >> 4];
        s[2 * i + 1] = digits[bytes_[i] & 0xf];
    }
    return s;
}

NodeId NodeId::from_hex(std::string_view hex) {
    if (hex.size() != 64) throw Error(ErrorCode::InvalidArgument, "node id hex must be 64 digits");
    auto nibble = [](char c) -> std::uint8_t {
        if (c >= '0' && c <= '9') return static_cast<std::uint8_t>(c - '0');
        if (c >= 'a' && c <= 'f') return static_cast<std::uint8_t>(c - 'a' + 10);
        if (c >= 'A' && c <= 'F') return static_cast<std::uint8_t>(c - 'A' + 10);
        throw Error(ErrorCode::InvalidArgument, "bad hex digit in node id");
    };
    Digest256 b{};
    for (std::size_t i = 0; i < b.size(); ++i) b[i] = static_cast<std::uint8_t>(nibble(hex[2 * i]) << 4 | nibble(hex[2 * i + 1]));
    return NodeId(b);
}

NodeId NodeId::named(std::string_view name) {
    std::string text = "c3-actor:";
    text += name;
    return NodeId(sha256(text));
}

NodeId generate_identity(RngStream& rng) {
    std::array<std::uint8_t, 40> key{};
    const char tag[] = "pub:";
    std::copy(tag, tag + 4, key.begin());
    for (std::size_t i = 0; i < 4; ++i) {
        const std::uint64_t w = rng.next_u64();
        for (std::size_t j = 0; j < 8; ++j) key[4 + i * 8 + j] = static_cast<std::uint8_t>(w >> (8 * j));
    }
    // public key = H("pub:" || private), id = H(public key)
    const Digest256 pub = sha256(std::span<const std::uint8_t>(key.data(), 36));
    return NodeId(sha256(pub));
}

PositionFingerprint fingerprint_of(std::span<const NodeId> neighbours) {
    std::vector<NodeId> sorted(neighbours.begin(), neighbours.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<std::uint8_t> buf;
    buf.reserve(sorted.size() * 32 + 3);
    buf.push_back('f');
    buf.push_back('p');
    buf.push_back(':');
    for (const auto& id : sorted) buf.insert(buf.end(), id.bytes().begin(), id.bytes().end());
    return PositionFingerprint{sha256(buf)};
}

}  // namespace c3
