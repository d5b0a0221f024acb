#pragma once

// Small hand-built worlds shared by the service tests and the acceptance run.

#include <memory>
#include <string>
#include <vector>

#include "c3/engine.hpp"
#include "c3/ledger.hpp"
#include "c3/overlay.hpp"
#include "c3/replication.hpp"
#include "c3/resource_repo.hpp"
#include "c3/services.hpp"

namespace c3::testing {

struct ServiceWorld {
    Simulator sim;
    Overlay overlay;
    Ledger ledger;
    ResourceRepository repo;
    ReplicatedStore store;
    ServiceRepository dsr;
    ServiceLayer layer;
    std::vector<NodeId> ids;
    NodeId developer = NodeId::named("developer");

    ServiceWorld(const std::vector<std::pair<std::string, int>>& regions, std::uint64_t seed, ServiceParams params,
                 MarketParams market = {}, std::int64_t balance = 1000)
        : overlay(OverlayParams{}, RngStream(seed, "overlay")),
          ledger(market),
          store(overlay, repo, RngStream(seed, "replication")),
          dsr(store, overlay),
          layer(sim, overlay, ledger, repo, store, dsr, RngStream(seed, "services"), params) {
        int k = 0;
        for (const auto& [region, count] : regions) {
            for (int i = 0; i < count; ++i, ++k) {
                NodeRecord rec;
                rec.id = NodeId::named(region + std::to_string(i));
                rec.region = region;
                rec.capacity = Resources{10, 100, 10};
                rec.lanes = 1;
                overlay.add_node(rec);
                NodeResourceRecord rr;
                rr.id = rec.id;
                rr.region = region;
                repo.register_node(rr);
                ledger.open_account(rec.id, balance);
                ids.push_back(rec.id);
            }
        }
        overlay.build_topology();
        for (const auto& id : ids) overlay.join(id, SimTime{0});
        for (const auto& [region, count] : regions) overlay.form_dvsp(region, SimTime{0});
        for (const auto& id : ids) repo.heartbeat(id, overlay.record(id).capacity, SimTime{0});
        repo.refresh_costs(ledger.prices());
        ledger.open_account(developer, 1'000'000);
    }

    ServiceDescriptor add_service(const std::string& id, Resources declared, std::int64_t subsidy,
                                  std::size_t min_replicas = 3, std::int64_t code_size = 5) {
        ServiceDescriptor d{id, "v1", declared, subsidy, code_size, min_replicas, developer};
        dsr.publish(d, "code:" + id, ids.front(), sim.now());
        layer.register_service(d);
        return d;
    }

    std::vector<NodeId> in_region(const std::string& region) const { return overlay.online_in_region(region); }
};

}  // namespace c3::testing
