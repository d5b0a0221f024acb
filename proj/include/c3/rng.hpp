#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace c3 {

/// FNV-1a over the label bytes.
constexpr std::uint64_t label_hash(std::string_view label) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : label) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Stream seed = splitmix64(master_seed ^ fnv1a64(label)).
constexpr std::uint64_t derive_stream_seed(std::uint64_t master_seed, std::string_view label) noexcept {
    return splitmix64(master_seed ^ label_hash(label));
}

/// Named, independently seeded random stream.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. Distributions are implemented here rather than taken from
/// <random> because the library distributions are implementation-defined and
/// would break cross-platform reproducibility.
class RngStream {
public:
    RngStream(std::uint64_t master_seed, std::string label)
        : seed_(master_seed), label_(std::move(label)),
          engine_(derive_stream_seed(master_seed, label_)) {}

    std::uint64_t seed() const noexcept { return seed_; }
    const std::string& label() const noexcept { return label_; }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1) with 53 bits of precision.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, bound). bound must be > 0.
    std::uint64_t uniform_below(std::uint64_t bound);

    /// Uniform integer in [lo, hi].
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

    /// Exponential variate with the given mean.
    double exponential(double mean);

    bool bernoulli(double p) { return uniform01() < p; }

    /// Child stream with a label derived from this one.
    RngStream fork(std::string_view suffix) const { return RngStream(seed_, label_ + "/" + std::string(suffix)); }

private:
    std::uint64_t seed_;
    std::string label_;
    std::mt19937_64 engine_;
};

}  // namespace c3
