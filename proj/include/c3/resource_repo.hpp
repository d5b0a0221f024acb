#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "c3/engine.hpp"
#include "c3/ledger.hpp"
#include "c3/node_id.hpp"
#include "c3/resources.hpp"
#include "c3/rng.hpp"

namespace c3 {

struct NodeResourceRecord {
    NodeId id;
    Resources free_capacity;
    /// EWMA of the online fraction, sampled once per heartbeat interval.
    double availability = 1.0;
    /// EWMA of completed/attempted tasks.
    double perf_history = 1.0;
    /// Currency units per normalised request (one unit of every resource).
    double projected_cost = 0.0;
    /// Capacity-class multiplier applied to the market price.
    double cost_factor = 1.0;
    std::string region;
    SimTime last_heartbeat;
    bool heard = false;
};

struct QueryWeights {
    double perf = 0.25;
    double avail = 0.25;
    double cost = 0.25;
    double geo = 0.25;
};

struct ResourceQuery {
    Resources required;
    std::optional<std::string> preferred_region;
    std::size_t count = 1;
    QueryWeights weights;
    /// Only nodes of preferred_region are eligible.
    bool region_strict = false;
    std::set<NodeId> exclude;
};

struct QueryResult {
    std::vector<NodeId> nodes;
    /// Fewer eligible nodes than requested; `nodes` holds all of them.
    bool insufficient = false;
};

struct RepoParams {
    /// Weight of the newest sample in each EWMA.
    double beta = 0.1;
    std::uint64_t heartbeat_interval = 1000;
    std::uint64_t staleness_intervals = 3;
};

/// Resource repository partitioned by region. Freshness is heartbeat-driven
/// and selection is availability-proportional weighted sampling.
class ResourceRepository {
public:
    explicit ResourceRepository(RepoParams params = {});

    const RepoParams& params() const noexcept { return params_; }

    void register_node(NodeResourceRecord record);
    bool is_registered(const NodeId& id) const { return region_of_.count(id) > 0; }
    const NodeResourceRecord& record(const NodeId& id) const;

    /// Online sample. The first heartbeat initialises availability to 1.0.
    const NodeResourceRecord& heartbeat(const NodeId& id, const Resources& free_capacity, SimTime at);
    /// Offline sample for a node that missed its heartbeat interval.
    const NodeResourceRecord& miss(const NodeId& id);
    void record_task(const NodeId& id, bool completed);
    void refresh_costs(const MarketPrice& prices);

    /// A region's partition is served by its super-peer; while unavailable its
    /// records are invisible to queries.
    void set_partition_available(const std::string& region, bool available);
    bool partition_available(const std::string& region) const { return unavailable_.count(region) == 0; }

    bool is_fresh(const NodeResourceRecord& r, SimTime now) const;

    /// Eligible records (fresh, capacity filter, region filter, not excluded),
    /// sorted by NodeId.
    std::vector<const NodeResourceRecord*> eligible(const ResourceQuery& q, SimTime now) const;

    /// Composite score of each eligible record, in the same order.
    static std::vector<double> scores(const std::vector<const NodeResourceRecord*>& eligible, const ResourceQuery& q);

    /// Weighted sampling without replacement with probability proportional to
    /// score. Throws InvalidArgument on bad weights or count == 0.
    QueryResult query(const ResourceQuery& q, SimTime now, RngStream& rng) const;

    /// Records in a region's partition (fresh or not).
    std::vector<NodeId> partition(const std::string& region) const;

private:
    RepoParams params_;
    std::map<std::string, std::map<NodeId, NodeResourceRecord>> partitions_;
    std::map<NodeId, std::string> region_of_;
    std::set<std::string> unavailable_;

    NodeResourceRecord& mutable_record(const NodeId& id);
};

/// Draws `count` indices without replacement, each draw proportional to the
/// remaining weights (uniform when all remaining weights are zero).
std::vector<std::size_t> weighted_sample_without_replacement(const std::vector<double>& weights, std::size_t count,
                                                             RngStream& rng);

}  // namespace c3
