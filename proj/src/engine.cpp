#include "c3/engine.hpp"

#include <cmath>
#include <string>

#include "c3/error.hpp"
#include "c3/rng.hpp"

namespace c3 {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::PastEvent: return "PastEvent";
        case ErrorCode::DuplicateJoin: return "DuplicateJoin";
        case ErrorCode::UnknownLeave: return "UnknownLeave";
        case ErrorCode::UnknownNode: return "UnknownNode";
        case ErrorCode::Unreachable: return "Unreachable";
        case ErrorCode::EmptyRegion: return "EmptyRegion";
        case ErrorCode::NoQuorum: return "NoQuorum";
        case ErrorCode::UnknownAccount: return "UnknownAccount";
        case ErrorCode::CreditLimitExceeded: return "CreditLimitExceeded";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::HistoryUnderflow: return "HistoryUnderflow";
        case ErrorCode::UnknownParent: return "UnknownParent";
        case ErrorCode::UnknownVersion: return "UnknownVersion";
        case ErrorCode::ConfigError: return "ConfigError";
        case ErrorCode::UnknownTarget: return "UnknownTarget";
    }
    return "Unknown";
}

std::string_view to_string(EventKind kind) noexcept {
    switch (kind) {
        case EventKind::NodeJoin: return "node_join";
        case EventKind::NodeLeave: return "node_leave";
        case EventKind::RequestArrival: return "request_arrival";
        case EventKind::RequestCompletion: return "request_completion";
        case EventKind::GossipRound: return "gossip_round";
        case EventKind::Heartbeat: return "heartbeat";
        case EventKind::PriceTick: return "price_tick";
        case EventKind::PlacementTick: return "placement_tick";
        case EventKind::AdoptionTick: return "adoption_tick";
        case EventKind::StreamTick: return "stream_tick";
        case EventKind::FailureInjection: return "failure_injection";
        case EventKind::Bootstrap: return "bootstrap";
    }
    return "unknown";
}

// --- RngStream ---------------------------------------------------------------

std::uint64_t RngStream::uniform_below(std::uint64_t bound) {
    if (bound == 0) throw Error(ErrorCode::InvalidArgument, "uniform_below bound must be positive");
    // Rejection on the top of the range keeps the draw unbiased.
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return x % bound;
}

std::int64_t RngStream::uniform_int(std::int64_t lo, std::int64_t hi) {
    if (hi < lo) throw Error(ErrorCode::InvalidArgument, "uniform_int empty range");
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    if (span == 0) return static_cast<std::int64_t>(engine_());
    return lo + static_cast<std::int64_t>(uniform_below(span));
}

double RngStream::exponential(double mean) {
    if (mean <= 0) return 0.0;
    return -mean * std::log1p(-uniform01());
}

// --- Simulator ---------------------------------------------------------------

EventHandle Simulator::schedule(SimTime fire_at, EventKind kind, Action action) {
    if (fire_at < clock_) {
        throw Error(ErrorCode::PastEvent, "event at " + std::to_string(fire_at.ticks) + " < clock " +
                                              std::to_string(clock_.ticks));
    }
    const std::uint64_t seq = next_seq_++;
    queue_.push(Entry{fire_at, seq, kind, std::move(action)});
    live_.insert(seq);
    return EventHandle{seq};
}

bool Simulator::cancel(EventHandle handle) {
    if (live_.erase(handle.seq) == 0) return false;
    cancelled_.insert(handle.seq);
    return true;
}

RunSummary Simulator::run(SimTime until) {
    while (!queue_.empty() && queue_.top().fire_at <= until) {
        // priority_queue::top is const; the entry is moved out before pop.
        Entry entry = std::move(const_cast<Entry&>(queue_.top()));
        queue_.pop();
        if (cancelled_.erase(entry.seq) > 0) continue;
        live_.erase(entry.seq);
        clock_ = entry.fire_at;
        if (record_log_) log_.push_back(ProcessedEvent{entry.fire_at, entry.seq, entry.kind});
        ++summary_.processed;
        ++summary_.per_kind[static_cast<std::size_t>(entry.kind)];
        entry.action();
    }
    if (clock_ < until) clock_ = until;
    summary_.final_clock = clock_;
    return summary_;
}

}  // namespace c3
