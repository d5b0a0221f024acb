#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "c3/engine.hpp"
#include "c3/ledger.hpp"
#include "c3/node_id.hpp"
#include "c3/overlay.hpp"
#include "c3/replication.hpp"
#include "c3/resource_repo.hpp"
#include "c3/resources.hpp"
#include "c3/rng.hpp"

namespace c3 {

struct ServiceDescriptor {
    std::string service_id;
    std::string version;
    /// Developer-declared resource budget per request.
    Resources declared_cost;
    /// Currency units per request paid by the developer.
    std::int64_t subsidy = 0;
    std::int64_t code_size = 1;
    std::size_t min_replicas = 1;
    NodeId developer;

    bool operator==(const ServiceDescriptor&) const = default;
};

std::string serialize(const ServiceDescriptor& desc, std::string_view code_ref);
ServiceDescriptor parse_descriptor(std::string_view text);

/// Distributed service repository: descriptors and code references stored in
/// the replicated store.
class ServiceRepository {
public:
    ServiceRepository(ReplicatedStore& store, Overlay& overlay, std::size_t replicas = 3)
        : store_(store), overlay_(overlay), replicas_(replicas) {}

    static std::string key_for(std::string_view service_id, std::string_view version);

    /// Publishing the same descriptor twice is a no-op. Throws Unreachable.
    std::string publish(const ServiceDescriptor& desc, std::string_view code_ref, const NodeId& publisher, SimTime now);

    /// Latest published version resolved through the requester's nearest replica.
    std::optional<ServiceDescriptor> resolve(const std::string& service_id, const NodeId& from, SimTime now,
                                             const std::optional<std::string>& version = std::nullopt);
    /// Nearest online replica holding the service code.
    std::optional<NodeId> code_holder(const std::string& service_id, const NodeId& from, SimTime now);
    bool resolvable(const std::string& service_id) const;

    std::vector<std::string> services() const;
    std::size_t entry_count() const;
    const std::string& latest_version(const std::string& service_id) const;

private:
    ReplicatedStore& store_;
    Overlay& overlay_;
    std::size_t replicas_;
    std::map<std::string, std::vector<std::string>> versions_;
};

struct Quote {
    std::int64_t gross = 0;
    std::int64_t subsidy_part = 0;
    std::int64_t requester_part = 0;
};

/// Gross price = ceil(sum(declared * unit price)); the subsidy covers up to
/// the gross and the requester pays the rest.
Quote quote_request(const Ledger& ledger, const ServiceDescriptor& desc);

struct Metering {
    bool terminated = false;
    /// Completed fraction of the execution, as num/den.
    std::int64_t num = 1;
    std::int64_t den = 1;
    Resources consumed;
};

/// Resources are consumed linearly over the execution; it stops at the first
/// point where some resource would exceed its declared budget.
Metering meter(const Resources& declared, const Resources& actual);

/// Pro-rata charge for a terminated execution, rounded up against the payer.
Quote prorate(const Quote& full, const Metering& m);

struct ServiceInstance {
    std::string service_id;
    NodeId host;
    std::string region;
    bool warm = false;
    SimTime warm_at;
    SimTime deployed_at;
    std::uint64_t deploy_seq = 0;
    std::uint64_t host_incarnation = 0;
    std::uint64_t served_count = 0;
    std::map<std::string, std::uint64_t> regional_traffic_window;
};

struct Request {
    std::uint64_t id = 0;
    NodeId requester;
    std::string service_id;
    /// Hidden from the scheduler; drives metering only.
    Resources actual_cost;
    SimTime issued_at;
    /// Data the executing host fetches before running.
    std::optional<std::string> read_key;
};

enum class Outcome : std::uint8_t { Completed, Terminated, InsufficientFunds, Unreachable, HostLost };

std::string_view to_string(Outcome outcome) noexcept;

struct InvocationResult {
    std::uint64_t request_id = 0;
    Outcome outcome = Outcome::Unreachable;
    NodeId host;
    SimTime issued_at;
    SimTime finished_at;
    std::int64_t requester_debit = 0;
    std::int64_t host_credit = 0;
    std::int64_t subsidy_part = 0;
    Resources declared;
    Resources consumed;
    bool settled = false;
    bool pulled = false;
};

struct PlacementRecord {
    SimTime at;
    std::string service_id;
    std::string action;
    std::optional<NodeId> host;
    std::string region;
};

struct ServiceParams {
    /// Replicas per unit of traffic share (4 = one replica per 25%).
    double kappa = 4.0;
    std::size_t cooldown_windows = 3;
    bool push_enabled = true;
    bool repeaters = true;
    bool currency = true;
    std::int64_t request_size = 1;
    QueryWeights placement{0.3, 0.4, 0.1, 0.2};
};

struct Distribution {
    std::map<NodeId, SimTime> arrival;
    std::map<NodeId, std::int64_t> egress;
    std::int64_t origin_egress = 0;
    std::vector<NodeId> unreachable;
};

/// Delivers `size` units from origin to consumers. With repeaters the
/// consumers form a binary tree below the origin and forward the content;
/// otherwise the origin sends every copy itself.
Distribution distribute_content(Overlay& overlay, const NodeId& origin, std::span<const NodeId> consumers,
                                std::int64_t size, bool repeaters, SimTime now);

/// Budgeted invocation with post-execution payment, and push/pull placement.
class ServiceLayer {
public:
    using Callback = std::function<void(const InvocationResult&)>;

    ServiceLayer(Simulator& sim, Overlay& overlay, Ledger& ledger, ResourceRepository& repo, ReplicatedStore& store,
                 ServiceRepository& dsr, RngStream rng, ServiceParams params = {});

    const ServiceParams& params() const noexcept { return params_; }

    void register_service(const ServiceDescriptor& desc);
    const ServiceDescriptor& descriptor(const std::string& service_id) const;
    std::vector<std::string> services() const;

    /// Push-mode bootstrap: min_replicas instances per service.
    void deploy_initial(SimTime now);

    /// Early failures (InsufficientFunds, Unreachable) are returned at once
    /// and have no side effects; otherwise the callback fires on completion.
    std::optional<InvocationResult> invoke(const Request& req, Callback done);

    void placement_tick(SimTime now);
    void on_node_leave(const NodeId& id, SimTime now);

    std::vector<const ServiceInstance*> instances(const std::string& service_id) const;
    std::size_t instance_count(const std::string& service_id) const;
    /// Warm instances on online hosts.
    std::size_t available_instances(const std::string& service_id, SimTime now) const;
    std::int64_t storage_used(const NodeId& host) const;

    const std::vector<PlacementRecord>& placement_log() const noexcept { return placement_log_; }
    void write_placement_csv(std::ostream& out) const;

    std::int64_t origin_egress() const noexcept { return origin_egress_; }
    std::uint64_t shortfalls() const noexcept { return shortfalls_; }
    /// Lowest (instances - min(min_replicas, eligible)) seen after placement actions.
    std::int64_t min_safety_margin() const noexcept { return min_safety_margin_; }

private:
    struct Pending;

    std::vector<NodeId> deploy(const std::string& service_id, std::size_t count, const std::string& region,
                               bool strict, SimTime now, const std::string& action);
    void retire(const std::string& service_id, std::size_t count, const std::string& region, SimTime now);
    void complete(const std::shared_ptr<Pending>& p);
    SimTime reserve_lane(const NodeId& host, SimTime ready, std::uint64_t duration);
    void check_safety(const std::string& service_id, SimTime now);
    std::size_t eligible_hosts(const ServiceDescriptor& desc, SimTime now) const;

    Simulator& sim_;
    Overlay& overlay_;
    Ledger& ledger_;
    ResourceRepository& repo_;
    ReplicatedStore& store_;
    ServiceRepository& dsr_;
    RngStream rng_;
    ServiceParams params_;

    std::map<std::string, ServiceDescriptor> catalog_;
    std::map<std::string, std::vector<ServiceInstance>> instances_;
    std::map<std::string, std::map<std::string, std::uint64_t>> traffic_;
    std::map<std::string, std::map<std::string, std::size_t>> surplus_streak_;
    std::map<NodeId, std::vector<SimTime>> lanes_;
    std::vector<PlacementRecord> placement_log_;
    std::uint64_t deploy_seq_ = 0;
    std::int64_t origin_egress_ = 0;
    std::uint64_t shortfalls_ = 0;
    std::int64_t min_safety_margin_ = 0;
};

}  // namespace c3
