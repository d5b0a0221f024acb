#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "c3/engine.hpp"
#include "c3/ledger.hpp"
#include "c3/node_id.hpp"
#include "c3/resources.hpp"
#include "c3/rng.hpp"

namespace c3 {

/// Alternating exponential online/offline durations. A zero offline mean
/// means the node never churns.
struct UptimeSchedule {
    double mean_online = 0.0;
    double mean_offline = 0.0;

    bool always_on() const noexcept { return mean_offline <= 0.0; }
    bool operator==(const UptimeSchedule&) const = default;
};

struct NodeRecord {
    NodeId id;
    Resources capacity;
    std::string region;
    UptimeSchedule uptime;
    std::set<NodeId> trust_links;
    bool online = false;
    /// Core-equivalents; each runs one request at a time.
    std::uint32_t lanes = 1;
};

struct VirtualSuperPeer {
    std::vector<NodeId> members;
    std::string region;
    std::uint64_t epoch = 0;

    std::size_t quorum() const noexcept { return members.size() / 2 + 1; }
};

struct MembershipDelta {
    NodeId node;
    bool joined = false;
    std::vector<NodeId> fingerprint_changed;
    std::vector<std::string> dvsp_flagged;
};

struct OverlayParams {
    std::size_t degree = 6;
    std::size_t min_degree = 3;
    /// Random links added between every pair of regions.
    std::size_t inter_region_links = 2;
    std::uint64_t intra_latency_min = 5;
    std::uint64_t intra_latency_max = 20;
    std::uint64_t inter_latency_min = 50;
    std::uint64_t inter_latency_max = 150;
    /// Target super-peer size m.
    std::size_t dvsp_size = 5;
};

enum class TxOutcome : std::uint8_t { Commit, Abort };

struct TxResult {
    TxOutcome outcome = TxOutcome::Commit;
    std::string reason;

    bool committed() const noexcept { return outcome == TxOutcome::Commit; }
};

/// Coordination layer: membership under churn, latency-weighted routing over
/// the online subgraph, per-region virtual super-peers and the transactions
/// they coordinate.
class Overlay {
public:
    Overlay(OverlayParams params, RngStream rng);

    const OverlayParams& params() const noexcept { return params_; }

    /// Registers a node without bringing it online.
    void add_node(NodeRecord record);
    /// Random regular graph of the configured degree inside each region plus
    /// sparse inter-region links, over every registered node.
    void build_topology();
    /// Adds an undirected edge; used for scripted topologies.
    void connect(const NodeId& a, const NodeId& b, std::uint64_t latency);

    /// Brings a node online, registering it first if unknown. Throws DuplicateJoin.
    MembershipDelta join(const NodeRecord& record, SimTime now);
    MembershipDelta join(const NodeId& id, SimTime now);
    /// Throws UnknownLeave if the node is not online.
    MembershipDelta leave(const NodeId& id, SimTime now);

    bool contains(const NodeId& id) const { return index_.count(id) > 0; }
    bool is_online(const NodeId& id) const;
    const NodeRecord& record(const NodeId& id) const;
    /// Incremented on every join, so a rejoined node is distinguishable.
    std::uint64_t incarnation(const NodeId& id) const;
    SimTime online_since(const NodeId& id) const;

    std::vector<NodeId> nodes() const;
    std::vector<NodeId> online_nodes() const;
    std::vector<NodeId> online_in_region(const std::string& region) const;
    std::vector<std::string> regions() const;
    std::size_t online_count() const noexcept { return online_count_; }

    /// Online neighbours, sorted.
    std::vector<NodeId> neighbours(const NodeId& id) const;
    PositionFingerprint fingerprint(const NodeId& id) const;

    /// Delivery time of a message of `size` bandwidth units, or nullopt when
    /// either end is offline or the destination is partitioned away.
    std::optional<SimTime> try_route(const NodeId& from, const NodeId& to, std::int64_t size, SimTime now);
    /// As try_route but throws Unreachable.
    SimTime route(const NodeId& from, const NodeId& to, std::int64_t size, SimTime now);

    /// Selects the dvsp_size longest-uptime online nodes of the region (ties
    /// by NodeId ascending) and bumps the region's epoch. Throws EmptyRegion.
    const VirtualSuperPeer& form_dvsp(const std::string& region, SimTime now);
    const VirtualSuperPeer* dvsp(const std::string& region) const;
    bool has_quorum(const VirtualSuperPeer& vsp) const;
    bool needs_reform(const std::string& region) const;
    /// Periodic maintenance: re-forms flagged or undersized super-peers.
    /// Returns the regions that were re-formed.
    std::vector<std::string> gossip_tick(SimTime now);

    /// Prepare/commit of ledger operations over the coordinator's quorum.
    /// Throws NoQuorum; aborts (ledger untouched) if a participating node is
    /// offline or any operation is rejected.
    TxResult execute_transaction(const VirtualSuperPeer& coordinator, std::span<const Transfer> ops, Ledger& ledger);

    /// True if the online subgraph (optionally minus one node) is connected.
    bool online_connected(const std::optional<NodeId>& without = std::nullopt) const;

    std::uint64_t topology_version() const noexcept { return topology_version_; }

private:
    struct Edge {
        std::uint32_t to;
        std::uint64_t latency;
    };
    struct NodeState {
        NodeRecord record;
        std::vector<Edge> adjacency;
        PositionFingerprint fingerprint;
        SimTime online_since;
        std::uint64_t incarnation = 0;
    };
    struct PathTree {
        std::uint64_t version = 0;
        std::vector<std::uint64_t> dist;
        std::vector<std::int64_t> bottleneck;
    };

    std::uint32_t index_of(const NodeId& id) const;
    bool adjacent(std::uint32_t a, std::uint32_t b) const;
    void add_edge(std::uint32_t a, std::uint32_t b, std::uint64_t latency);
    std::uint64_t draw_latency(std::uint32_t a, std::uint32_t b);
    std::size_t online_degree(std::uint32_t i) const;
    void repair_degree(std::uint32_t i, std::set<std::uint32_t>& touched);
    void refresh_fingerprint(std::uint32_t i);
    const PathTree& path_tree(std::uint32_t src);
    void random_regular(const std::vector<std::uint32_t>& members);

    OverlayParams params_;
    RngStream rng_;
    std::vector<NodeState> nodes_;
    std::unordered_map<NodeId, std::uint32_t, NodeIdHash> index_;
    std::size_t online_count_ = 0;
    std::uint64_t topology_version_ = 0;
    std::unordered_map<std::uint32_t, PathTree> path_cache_;
    std::map<std::string, VirtualSuperPeer> dvsps_;
    std::map<std::string, std::uint64_t> epochs_;
    std::set<std::string> flagged_;
};

}  // namespace c3
