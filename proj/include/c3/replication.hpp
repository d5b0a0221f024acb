#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "c3/engine.hpp"
#include "c3/node_id.hpp"
#include "c3/overlay.hpp"
#include "c3/resource_repo.hpp"
#include "c3/rng.hpp"

namespace c3 {

using VersionVector = std::map<NodeId, std::uint64_t>;

enum class CausalOrder : std::uint8_t { Equal, Before, After, Concurrent };

/// Order of a relative to b.
CausalOrder compare(const VersionVector& a, const VersionVector& b);
/// Every counter of `small` is <= the matching counter of `big`.
bool includes(const VersionVector& big, const VersionVector& small);
VersionVector pointwise_max(const VersionVector& a, const VersionVector& b);

/// Last-writer stamp. A write is stamped strictly above the state it
/// overwrites, so causal successors always carry the larger stamp.
struct Stamp {
    std::uint64_t time = 0;
    NodeId writer;

    auto operator<=>(const Stamp&) const = default;
    bool operator==(const Stamp&) const = default;
};

struct ObjectState {
    bool present = false;
    VersionVector vv;
    Stamp wall;
    std::string payload;
    /// Models client-side encryption: only `owner` may read the payload.
    bool encrypted = false;
    NodeId owner;

    bool operator==(const ObjectState&) const = default;
};

/// Join of two replica states: the larger (stamp, payload, flags) wins the
/// value, version vectors merge pointwise. Commutative, associative and
/// idempotent; for states produced by put the version-vector-dominant state
/// always holds the larger stamp, so dominance and last-writer-wins agree.
ObjectState merge(const ObjectState& a, const ObjectState& b);

struct ReplicaSet {
    std::string key;
    std::vector<NodeId> hosts;
    std::size_t target = 3;
    std::int64_t size = 1;
    std::optional<std::string> region;
};

struct WriteRecord {
    std::string key;
    VersionVector vv;
    NodeId writer;
    SimTime at;
    std::optional<SimTime> agreed_at;
    /// Start of the quiet segment that ended in agreement: the key's last
    /// write or the last rejoin of a node holding one of its copies.
    std::optional<SimTime> quiesced_at;
};

struct ReadResult {
    enum class Status : std::uint8_t { Ok, Unreachable, Rejected, Missing } status = Status::Missing;
    std::string payload;
    NodeId replica;
    /// Round-trip completion time for Ok reads.
    SimTime delivered;
};

struct ReplicationParams {
    std::size_t replicas = 3;
    QueryWeights placement{0.2, 0.4, 0.1, 0.3};
};

/// Key-value store with version vectors and anti-entropy gossip. Replica
/// copies live on nodes' disks, so a copy held by a node that dropped out of
/// a replica set is handed back when the node rejoins.
class ReplicatedStore {
public:
    ReplicatedStore(Overlay& overlay, ResourceRepository& repo, RngStream rng, ReplicationParams params = {});

    const ReplicationParams& params() const noexcept { return params_; }

    /// Places a new key on replicas chosen through the repository
    /// (storage-weighted profile). Throws Unreachable when no host is found.
    const ReplicaSet& create(const std::string& key, SimTime now, std::int64_t size = 1,
                             std::optional<std::string> region = std::nullopt, std::optional<std::size_t> r = std::nullopt);
    /// Places a key on explicit hosts.
    const ReplicaSet& create_on(const std::string& key, std::vector<NodeId> hosts, std::int64_t size = 1);

    bool has_key(const std::string& key) const { return sets_.count(key) > 0; }
    const ReplicaSet& replica_set(const std::string& key) const;
    std::vector<std::string> keys() const;

    /// Online replica host with the lowest route latency from `from`.
    std::optional<NodeId> nearest_replica(const std::string& key, const NodeId& from, SimTime now);

    /// Applies a write at the writer's nearest replica. Throws Unreachable.
    VersionVector put(const std::string& key, std::string payload, const NodeId& writer, SimTime now,
                      bool encrypted = false);
    /// Applies a write at a specific online replica host.
    VersionVector put_at(const std::string& key, const NodeId& replica, std::string payload, const NodeId& writer,
                         SimTime now, bool encrypted = false);

    /// Client read from the nearest replica.
    ReadResult read(const std::string& key, const NodeId& reader, SimTime now);
    /// Host-side logic reading its local copy; encrypted payloads are only
    /// readable when the host is their owner. Rejections are counted.
    ReadResult host_read(const std::string& key, const NodeId& host);
    std::uint64_t privacy_rejections() const noexcept { return privacy_rejections_; }

    const ObjectState* state_at(const std::string& key, const NodeId& host) const;

    /// Pairwise anti-entropy: both replicas end with merge(a, b).
    void exchange(const std::string& key, const NodeId& a, const NodeId& b, SimTime now);
    /// Every online replica exchanges with one random online peer replica.
    void gossip_round(const std::string& key, SimTime now);
    /// Gossips every key whose online replicas may disagree.
    void gossip_dirty(SimTime now);
    /// All online replicas hold identical state.
    bool converged(const std::string& key) const;

    /// Drops offline hosts from replica sets and tops them back up to
    /// min(r, online nodes), seeding newcomers from surviving copies.
    void rereplicate(SimTime now);
    /// Hands any orphaned copies held by a rejoining node back to their sets.
    void on_join(const NodeId& id, SimTime now);

    /// Storage units held on a node (replica and orphan copies).
    std::int64_t storage_used(const NodeId& id) const;

    const std::vector<WriteRecord>& writes() const noexcept { return writes_; }
    /// Acknowledged writes not included in any surviving copy (online or not).
    std::size_t lost_writes() const;

private:
    ObjectState& copy_at(const std::string& key, const NodeId& host);
    std::vector<NodeId> online_hosts(const ReplicaSet& set) const;
    void check_agreement(const std::string& key, SimTime now);
    std::vector<NodeId> pick_hosts(const ReplicaSet& set, std::size_t count, SimTime now);

    Overlay& overlay_;
    ResourceRepository& repo_;
    RngStream rng_;
    ReplicationParams params_;
    std::map<std::string, ReplicaSet> sets_;
    std::map<std::string, std::map<NodeId, ObjectState>> copies_;
    std::map<NodeId, std::set<std::string>> held_;
    std::set<std::string> dirty_;
    std::vector<WriteRecord> writes_;
    std::map<std::string, std::vector<std::size_t>> pending_;
    std::map<std::string, SimTime> last_activity_;
    std::uint64_t privacy_rejections_ = 0;
};

}  // namespace c3
