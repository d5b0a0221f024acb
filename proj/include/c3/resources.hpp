#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace c3 {

enum class ResourceKind : std::uint8_t { Compute = 0, Storage = 1, Bandwidth = 2 };

inline constexpr std::array<ResourceKind, 3> kAllResources{ResourceKind::Compute, ResourceKind::Storage,
                                                           ResourceKind::Bandwidth};

constexpr std::string_view to_string(ResourceKind kind) noexcept {
    switch (kind) {
        case ResourceKind::Compute: return "compute";
        case ResourceKind::Storage: return "storage";
        case ResourceKind::Bandwidth: return "bandwidth";
    }
    return "?";
}

/// Integer amounts of each resource. Capacities are rates for compute and
/// bandwidth (units per tick) and an absolute amount for storage.
struct Resources {
    std::int64_t compute = 0;
    std::int64_t storage = 0;
    std::int64_t bandwidth = 0;

    constexpr std::int64_t& operator[](ResourceKind k) {
        return k == ResourceKind::Compute ? compute : k == ResourceKind::Storage ? storage : bandwidth;
    }
    constexpr std::int64_t operator[](ResourceKind k) const {
        return k == ResourceKind::Compute ? compute : k == ResourceKind::Storage ? storage : bandwidth;
    }

    constexpr Resources& operator+=(const Resources& o) {
        compute += o.compute;
        storage += o.storage;
        bandwidth += o.bandwidth;
        return *this;
    }
    constexpr Resources& operator-=(const Resources& o) {
        compute -= o.compute;
        storage -= o.storage;
        bandwidth -= o.bandwidth;
        return *this;
    }
    friend constexpr Resources operator+(Resources a, const Resources& b) { return a += b; }
    friend constexpr Resources operator-(Resources a, const Resources& b) { return a -= b; }

    /// Every component of *this is >= the matching component of other.
    constexpr bool covers(const Resources& other) const {
        return compute >= other.compute && storage >= other.storage && bandwidth >= other.bandwidth;
    }
    constexpr bool non_negative() const { return compute >= 0 && storage >= 0 && bandwidth >= 0; }

    bool operator==(const Resources&) const = default;
};

}  // namespace c3
