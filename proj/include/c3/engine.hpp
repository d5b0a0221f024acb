#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <limits>
#include <queue>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace c3 {

/// Virtual time in milliseconds (1 tick = 1 ms).
struct SimTime {
    std::uint64_t ticks = 0;

    constexpr auto operator<=>(const SimTime&) const = default;

    constexpr SimTime operator+(std::uint64_t d) const { return SimTime{ticks + d}; }
    constexpr SimTime& operator+=(std::uint64_t d) {
        ticks += d;
        return *this;
    }
    constexpr std::uint64_t operator-(SimTime other) const { return ticks - other.ticks; }

    static constexpr SimTime max() { return SimTime{std::numeric_limits<std::uint64_t>::max()}; }
};

enum class EventKind : std::uint8_t {
    NodeJoin,
    NodeLeave,
    RequestArrival,
    RequestCompletion,
    GossipRound,
    Heartbeat,
    PriceTick,
    PlacementTick,
    AdoptionTick,
    StreamTick,
    FailureInjection,
    Bootstrap,
};

inline constexpr std::size_t kEventKindCount = 12;

std::string_view to_string(EventKind kind) noexcept;

struct EventHandle {
    std::uint64_t seq = 0;
};

struct ProcessedEvent {
    SimTime fire_at;
    std::uint64_t seq;
    EventKind kind;

    bool operator==(const ProcessedEvent&) const = default;
};

struct RunSummary {
    SimTime final_clock;
    std::uint64_t processed = 0;
    std::array<std::uint64_t, kEventKindCount> per_kind{};

    std::uint64_t count(EventKind kind) const { return per_kind[static_cast<std::size_t>(kind)]; }
    bool operator==(const RunSummary&) const = default;
};

/// Single-threaded discrete-event core. Events fire in (fire_at, seq) order.
class Simulator {
public:
    using Action = std::function<void()>;

    explicit Simulator(bool record_log = false) : record_log_(record_log) {}

    Simulator(const Simulator&) = delete;
    Simulator& operator=(const Simulator&) = delete;

    SimTime now() const noexcept { return clock_; }

    /// Throws Error(PastEvent) if fire_at < now().
    EventHandle schedule(SimTime fire_at, EventKind kind, Action action);
    EventHandle schedule_in(std::uint64_t delay, EventKind kind, Action action) {
        return schedule(clock_ + delay, kind, std::move(action));
    }

    /// Returns false if the event already fired or was cancelled.
    bool cancel(EventHandle handle);

    /// Processes every event with fire_at <= until, then advances the clock to until.
    RunSummary run(SimTime until);

    std::size_t pending() const noexcept { return queue_.size() - cancelled_.size(); }
    const std::vector<ProcessedEvent>& processed_log() const noexcept { return log_; }
    const RunSummary& summary() const noexcept { return summary_; }

private:
    struct Entry {
        SimTime fire_at;
        std::uint64_t seq;
        EventKind kind;
        Action action;
    };
    struct Later {
        bool operator()(const Entry& a, const Entry& b) const {
            if (a.fire_at != b.fire_at) return a.fire_at > b.fire_at;
            return a.seq > b.seq;
        }
    };

    SimTime clock_{};
    std::uint64_t next_seq_ = 0;
    std::priority_queue<Entry, std::vector<Entry>, Later> queue_;
    std::unordered_set<std::uint64_t> live_;
    std::unordered_set<std::uint64_t> cancelled_;
    bool record_log_;
    std::vector<ProcessedEvent> log_;
    RunSummary summary_;
};

}  // namespace c3
