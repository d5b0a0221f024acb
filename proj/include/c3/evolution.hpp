#pragma once

#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "c3/engine.hpp"
#include "c3/node_id.hpp"

namespace c3 {

struct VersionNode {
    std::string version_id;
    std::optional<std::string> parent;
    std::string service_id;
    double fitness = 0.0;
    SimTime released_at;
};

struct AdoptionState {
    NodeId node;
    std::string service_id;
    std::string active_version;
    /// Previously active versions, most recent last.
    std::vector<std::string> history;

    bool operator==(const AdoptionState&) const = default;
};

struct AdoptionRecord {
    SimTime at;
    NodeId node;
    std::string service_id;
    std::string from_version;
    std::string to_version;
    bool rollback = false;
    std::size_t steps = 0;
};

/// Version diffusion along trust links. A node switches to a version held by
/// at least a fraction theta of the peers it trusts, but only if that version
/// is strictly fitter than its current one.
class Evolution {
public:
    explicit Evolution(double theta = 0.5);

    double theta() const noexcept { return theta_; }

    /// Out-links: the peers `node` trusts (self-links dropped).
    void set_trust(const NodeId& node, std::set<NodeId> trusted);
    const std::set<NodeId>& trusted_by(const NodeId& node) const;

    /// Adds a root version; throws UnknownParent if a parent is named.
    void add_root(VersionNode v);
    const VersionNode& version(const std::string& version_id) const;
    bool has_version(const std::string& version_id) const { return versions_.count(version_id) > 0; }

    /// Initial state, outside the adoption log.
    void install(const NodeId& node, const std::string& version_id);

    /// Registers v and makes every origin adopt it. Throws UnknownParent.
    void release(VersionNode v, std::span<const NodeId> origins, SimTime now);

    /// Evaluates the adoption rule for one node against current peer states.
    bool adoption_tick(const NodeId& node, const std::string& service_id, SimTime now);
    /// Synchronous round: every online node decides from the same snapshot.
    std::size_t adoption_round(SimTime now, const std::function<bool(const NodeId&)>& online);

    /// Throws HistoryUnderflow when fewer than `steps` adoptions are recorded.
    const AdoptionState& rollback(const NodeId& node, const std::string& service_id, std::size_t steps, SimTime now);

    const AdoptionState* state(const NodeId& node, const std::string& service_id) const;
    std::map<std::pair<NodeId, std::string>, AdoptionState> states() const { return states_; }
    std::vector<NodeId> adopters(const std::string& version_id) const;

    const std::vector<AdoptionRecord>& log() const noexcept { return log_; }
    const std::map<std::pair<NodeId, std::string>, AdoptionState>& initial_states() const noexcept { return initial_; }

    /// Re-applies an adoption log to initial states.
    static std::map<std::pair<NodeId, std::string>, AdoptionState> replay(
        const std::map<std::pair<NodeId, std::string>, AdoptionState>& initial, std::span<const AdoptionRecord> log);

    /// CSV with columns at,node,service_id,from_version,to_version.
    void write_csv(std::ostream& out) const;

private:
    std::optional<std::string> decide(const NodeId& node, const std::string& service_id) const;
    void adopt(const NodeId& node, const std::string& service_id, const std::string& version, SimTime now);

    double theta_;
    std::map<std::string, VersionNode> versions_;
    std::map<NodeId, std::set<NodeId>> trust_;
    std::map<std::pair<NodeId, std::string>, AdoptionState> states_;
    std::map<std::pair<NodeId, std::string>, AdoptionState> initial_;
    std::vector<AdoptionRecord> log_;
};

}  // namespace c3
