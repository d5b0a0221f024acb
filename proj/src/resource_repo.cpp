#include "c3/resource_repo.hpp"

#include <algorithm>
#include <cmath>

#include "c3/error.hpp"

namespace c3 {

namespace {

void validate(const ResourceQuery& q) {
    if (q.count == 0) throw Error(ErrorCode::InvalidArgument, "query count must be >= 1");
    const double w[] = {q.weights.perf, q.weights.avail, q.weights.cost, q.weights.geo};
    std::int64_t scaled = 0;
    for (double x : w) {
        if (!(x >= 0.0)) throw Error(ErrorCode::InvalidArgument, "query weights must be non-negative");
        scaled += static_cast<std::int64_t>(std::llround(x * 1e6));
    }
    if (scaled != 1'000'000) throw Error(ErrorCode::InvalidArgument, "query weights must sum to 1");
    if (q.region_strict && !q.preferred_region) {
        throw Error(ErrorCode::InvalidArgument, "region_strict needs a preferred region");
    }
}

}  // namespace

std::vector<std::size_t> weighted_sample_without_replacement(const std::vector<double>& weights, std::size_t count,
                                                             RngStream& rng) {
    std::vector<std::size_t> remaining(weights.size());
    for (std::size_t i = 0; i < remaining.size(); ++i) remaining[i] = i;
    std::vector<std::size_t> picked;
    count = std::min(count, weights.size());
    while (picked.size() < count) {
        double total = 0.0;
        for (auto i : remaining) total += weights[i];
        std::size_t slot = 0;
        if (total > 0.0) {
            const double u = rng.uniform01() * total;
            double acc = 0.0;
            slot = remaining.size();
            for (std::size_t k = 0; k < remaining.size(); ++k) {
                acc += weights[remaining[k]];
                if (u < acc && weights[remaining[k]] > 0.0) {
                    slot = k;
                    break;
                }
            }
            // Rounding can leave u == total; fall back to the last positive weight.
            if (slot == remaining.size()) {
                for (std::size_t k = remaining.size(); k-- > 0;) {
                    if (weights[remaining[k]] > 0.0) {
                        slot = k;
                        break;
                    }
                }
            }
        } else {
            slot = static_cast<std::size_t>(rng.uniform_below(remaining.size()));
        }
        picked.push_back(remaining[slot]);
        remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(slot));
    }
    return picked;
}

ResourceRepository::ResourceRepository(RepoParams params) : params_(params) {
    if (params_.beta <= 0.0 || params_.beta > 1.0) throw Error(ErrorCode::InvalidArgument, "beta must be in (0,1]");
    if (params_.heartbeat_interval == 0) throw Error(ErrorCode::InvalidArgument, "heartbeat interval must be positive");
}

void ResourceRepository::register_node(NodeResourceRecord record) {
    record.availability = std::clamp(record.availability, 0.0, 1.0);
    record.perf_history = std::clamp(record.perf_history, 0.0, 1.0);
    auto [it, inserted] = region_of_.emplace(record.id, record.region);
    if (!inserted) {
        partitions_[it->second].erase(record.id);
        it->second = record.region;
    }
    partitions_[record.region][record.id] = std::move(record);
}

NodeResourceRecord& ResourceRepository::mutable_record(const NodeId& id) {
    auto it = region_of_.find(id);
    if (it == region_of_.end()) throw Error(ErrorCode::UnknownNode, id.short_hex());
    return partitions_.at(it->second).at(id);
}

const NodeResourceRecord& ResourceRepository::record(const NodeId& id) const {
    auto it = region_of_.find(id);
    if (it == region_of_.end()) throw Error(ErrorCode::UnknownNode, id.short_hex());
    return partitions_.at(it->second).at(id);
}

const NodeResourceRecord& ResourceRepository::heartbeat(const NodeId& id, const Resources& free_capacity, SimTime at) {
    auto& r = mutable_record(id);
    if (!r.heard) {
        r.availability = 1.0;
        r.heard = true;
    } else {
        r.availability = (1.0 - params_.beta) * r.availability + params_.beta;
    }
    r.free_capacity = free_capacity;
    r.last_heartbeat = at;
    return r;
}

const NodeResourceRecord& ResourceRepository::miss(const NodeId& id) {
    auto& r = mutable_record(id);
    if (r.heard) r.availability = (1.0 - params_.beta) * r.availability;
    return r;
}

void ResourceRepository::record_task(const NodeId& id, bool completed) {
    auto& r = mutable_record(id);
    r.perf_history = (1.0 - params_.beta) * r.perf_history + (completed ? params_.beta : 0.0);
}

void ResourceRepository::refresh_costs(const MarketPrice& prices) {
    const double unit = static_cast<double>(prices.cost_micro(Resources{1, 1, 1})) / MarketPrice::kScale;
    for (auto& [region, part] : partitions_) {
        for (auto& [id, r] : part) r.projected_cost = unit * r.cost_factor;
    }
}

void ResourceRepository::set_partition_available(const std::string& region, bool available) {
    if (available) {
        unavailable_.erase(region);
    } else {
        unavailable_.insert(region);
    }
}

bool ResourceRepository::is_fresh(const NodeResourceRecord& r, SimTime now) const {
    if (!r.heard) return false;
    return now - r.last_heartbeat <= params_.heartbeat_interval * params_.staleness_intervals;
}

std::vector<const NodeResourceRecord*> ResourceRepository::eligible(const ResourceQuery& q, SimTime now) const {
    std::vector<const NodeResourceRecord*> out;
    for (const auto& [region, part] : partitions_) {
        if (!partition_available(region)) continue;
        if (q.region_strict && region != *q.preferred_region) continue;
        for (const auto& [id, r] : part) {
            if (q.exclude.count(id) > 0) continue;
            if (!is_fresh(r, now) || !r.free_capacity.covers(q.required)) continue;
            out.push_back(&r);
        }
    }
    std::sort(out.begin(), out.end(), [](auto* a, auto* b) { return a->id < b->id; });
    return out;
}

std::vector<double> ResourceRepository::scores(const std::vector<const NodeResourceRecord*>& eligible,
                                               const ResourceQuery& q) {
    double max_cost = 0.0;
    for (const auto* r : eligible) max_cost = std::max(max_cost, r->projected_cost);
    std::vector<double> out;
    out.reserve(eligible.size());
    for (const auto* r : eligible) {
        const double normcost = max_cost > 0.0 ? r->projected_cost / max_cost : 0.0;
        const double geo = q.preferred_region && r->region == *q.preferred_region ? 1.0 : 0.0;
        out.push_back(q.weights.perf * r->perf_history + q.weights.avail * r->availability +
                      q.weights.cost * (1.0 - normcost) + q.weights.geo * geo);
    }
    return out;
}

QueryResult ResourceRepository::query(const ResourceQuery& q, SimTime now, RngStream& rng) const {
    validate(q);
    const auto pool = eligible(q, now);
    QueryResult result;
    result.insufficient = pool.size() < q.count;
    if (pool.empty()) return result;
    const auto picks = weighted_sample_without_replacement(scores(pool, q), q.count, rng);
    for (auto i : picks) result.nodes.push_back(pool[i]->id);
    return result;
}

std::vector<NodeId> ResourceRepository::partition(const std::string& region) const {
    std::vector<NodeId> out;
    auto it = partitions_.find(region);
    if (it == partitions_.end()) return out;
    for (const auto& [id, r] : it->second) out.push_back(id);
    return out;
}

}  // namespace c3
