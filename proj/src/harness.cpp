#include "c3/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "c3/error.hpp"
#include "c3/overlay.hpp"
#include "c3/replication.hpp"
#include "c3/resource_repo.hpp"

namespace c3 {

std::string_view to_string(WorkKind kind) noexcept {
    switch (kind) {
        case WorkKind::WikiRead: return "wiki_read";
        case WorkKind::WikiWrite: return "wiki_write";
        case WorkKind::Video: return "video";
    }
    return "?";
}

// --- workload ----------------------------------------------------------------

std::vector<std::string> node_regions(const ScenarioConfig& cfg) {
    std::vector<std::string> out;
    for (const auto& c : cfg.population) out.insert(out.end(), c.count, c.region);
    return out;
}

namespace {

/// Picks a region by weight (population-proportional when unweighted), then a
/// node of that region uniformly.
class RequesterPicker {
public:
    RequesterPicker(const std::vector<std::string>& regions, const std::map<std::string, double>& weights) {
        for (std::size_t i = 0; i < regions.size(); ++i) members_[regions[i]].push_back(i);
        for (const auto& [r, m] : members_) {
            const double w = weights.empty() ? static_cast<double>(m.size()) : (weights.count(r) ? weights.at(r) : 0.0);
            if (w <= 0) continue;
            names_.push_back(r);
            cumulative_.push_back(total_ += w);
        }
    }

    std::size_t pick(RngStream& rng) const {
        const double u = rng.uniform01() * total_;
        auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
        if (it == cumulative_.end()) --it;
        const auto& m = members_.at(names_[static_cast<std::size_t>(it - cumulative_.begin())]);
        return m[rng.uniform_below(m.size())];
    }

private:
    std::map<std::string, std::vector<std::size_t>> members_;
    std::vector<std::string> names_;
    std::vector<double> cumulative_;
    double total_ = 0;
};

/// Within budget each resource is uniform in [ceil(d/2), d]; an overrun
/// pushes one declared resource above its budget.
Resources draw_actual(const Resources& declared, double overrun_p, RngStream& rng) {
    Resources a;
    for (auto k : kAllResources) {
        const auto d = declared[k];
        a[k] = d == 0 ? 0 : rng.uniform_int((d + 1) / 2, d);
    }
    if (rng.bernoulli(overrun_p)) {
        std::vector<ResourceKind> budgeted;
        for (auto k : kAllResources) {
            if (declared[k] > 0) budgeted.push_back(k);
        }
        if (!budgeted.empty()) {
            const auto k = budgeted[rng.uniform_below(budgeted.size())];
            a[k] = declared[k] + 1 + rng.uniform_int(0, declared[k] - 1);
        }
    }
    return a;
}

template <typename Fn>
void poisson(double rate_per_1000, std::uint64_t stop, RngStream& rng, Fn&& emit) {
    if (rate_per_1000 <= 0) return;
    const double mean = 1000.0 / rate_per_1000;
    double t = 0;
    while (true) {
        t += rng.exponential(mean);
        if (!(t < static_cast<double>(stop))) return;
        emit(static_cast<std::uint64_t>(t));
    }
}

}  // namespace

std::vector<WorkItem> workload_wiki(const ScenarioConfig& cfg, const std::vector<std::string>& regions) {
    std::vector<WorkItem> out;
    const auto& w = cfg.workload.wiki;
    if (w.rate <= 0) return out;
    RngStream rng(cfg.seed, "workload.wiki");
    const RequesterPicker picker(regions, w.regions);
    const auto& declared = cfg.service(w.service).declared;
    poisson(w.rate, cfg.workload_stop(), rng, [&](std::uint64_t at) {
        WorkItem item;
        item.at = SimTime{at};
        item.kind = rng.bernoulli(w.read_fraction) ? WorkKind::WikiRead : WorkKind::WikiWrite;
        if (w.read_fraction >= 1.0) item.kind = WorkKind::WikiRead;
        item.requester = picker.pick(rng);
        item.service = w.service;
        item.page = static_cast<std::size_t>(rng.uniform_below(w.pages));
        item.actual = draw_actual(declared, cfg.workload.overrun_probability, rng);
        out.push_back(std::move(item));
    });
    return out;
}

std::vector<WorkItem> workload_video(const ScenarioConfig& cfg, const std::vector<std::string>& regions) {
    std::vector<WorkItem> out;
    const auto& v = cfg.workload.video;
    if (v.rate <= 0) return out;
    RngStream rng(cfg.seed, "workload.video");
    const RequesterPicker picker(regions, v.regions);
    const auto& declared = cfg.service(v.service).declared;
    poisson(v.rate, cfg.workload_stop(), rng, [&](std::uint64_t at) {
        WorkItem item;
        item.at = SimTime{at};
        item.kind = WorkKind::Video;
        item.requester = picker.pick(rng);
        item.service = v.service;
        item.actual = draw_actual(declared, cfg.workload.overrun_probability, rng);
        item.duration = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::ceil(rng.exponential(v.duration_mean))));
        out.push_back(std::move(item));
    });
    return out;
}

std::vector<WorkItem> generate_workload(const ScenarioConfig& cfg) {
    const auto regions = node_regions(cfg);
    auto items = workload_wiki(cfg, regions);
    auto video = workload_video(cfg, regions);
    items.insert(items.end(), std::make_move_iterator(video.begin()), std::make_move_iterator(video.end()));
    std::stable_sort(items.begin(), items.end(), [](const WorkItem& a, const WorkItem& b) { return a.at < b.at; });
    for (std::size_t i = 0; i < items.size(); ++i) items[i].id = i + 1;
    return items;
}

// --- simulation world --------------------------------------------------------

namespace {

std::string page_key(std::size_t page) { return "wiki/" + std::to_string(page); }

NodeId developer_of(const std::string& service) { return NodeId::named("developer:" + service); }
NodeId vendor_id() { return NodeId::named("vendor"); }

struct Session {
    std::size_t requester = 0;
    std::string service;
    std::optional<NodeId> host;
    std::uint64_t end = 0;
    std::uint64_t low_streak = 0;
    SessionRow row;
};

class World {
public:
    explicit World(const ScenarioConfig& cfg);
    RunResult run();

private:
    bool community() const { return cfg_.mode == Mode::Community; }
    SimTime now() const { return sim_.now(); }

    void bootstrap();
    void resolve_kills();
    void schedule_churn(std::size_t i, bool currently_online);
    void apply_state(std::size_t i, const std::string& cause);
    void set_vendor(bool up, const std::string& cause);

    void heartbeat_tick();
    void gossip_tick();
    void price_tick();
    void stream_tick();
    template <typename Fn>
    void every(std::uint64_t interval, EventKind kind, Fn fn);

    void issue(const WorkItem& w);
    void issue_vendor(const WorkItem& w, std::size_t row);
    void finish(std::size_t row, const WorkItem& w, const InvocationResult& res);
    void start_session(const WorkItem& w, const NodeId& host);
    bool serving(const NodeId& host, const NodeId& requester);
    std::optional<NodeId> failover(const std::string& service, const NodeId& requester);

    RunResult collect();

    ScenarioConfig cfg_;
    Simulator sim_;
    Overlay overlay_;
    Ledger ledger_;
    ResourceRepository repo_;
    ReplicatedStore store_;
    ServiceRepository dsr_;
    ServiceLayer layer_;
    Evolution evolution_;

    std::vector<NodeId> ids_;
    std::vector<bool> churn_online_;
    std::vector<int> killed_;
    std::vector<RngStream> churn_rng_;
    std::vector<std::pair<KillSpec, std::vector<std::size_t>>> kills_;
    int vendor_down_ = 0;
    std::vector<SimTime> vendor_lanes_;

    std::vector<WorkItem> workload_;
    Logs logs_;
    std::set<std::size_t> inflight_;
    std::map<std::uint64_t, Session> sessions_;
    Resources demand_;
};

OverlayParams overlay_params(const TopologySpec& t) {
    OverlayParams p;
    p.degree = t.degree;
    p.min_degree = t.min_degree;
    p.inter_region_links = t.inter_region_links;
    p.intra_latency_min = t.intra_latency_min;
    p.intra_latency_max = t.intra_latency_max;
    p.inter_latency_min = t.inter_latency_min;
    p.inter_latency_max = t.inter_latency_max;
    p.dvsp_size = t.dvsp_size;
    return p;
}

MarketParams market_params(const MarketSpec& m) {
    MarketParams p;
    p.alpha = m.alpha;
    p.p_min = m.p_min;
    p.p_max = m.p_max;
    p.initial_price = {m.initial_price.compute, m.initial_price.storage, m.initial_price.bandwidth};
    p.minting = m.minting;
    return p;
}

ServiceParams service_params(const ScenarioConfig& cfg) {
    ServiceParams p;
    p.kappa = cfg.services.kappa;
    p.cooldown_windows = cfg.services.cooldown_windows;
    p.push_enabled = cfg.services.push;
    p.repeaters = cfg.services.repeaters;
    p.currency = cfg.mode == Mode::Community;
    return p;
}

World::World(const ScenarioConfig& cfg)
    : cfg_(cfg),
      overlay_(overlay_params(cfg.topology), RngStream(cfg.seed, "overlay")),
      ledger_(market_params(cfg.market)),
      repo_(RepoParams{cfg.topology.beta, cfg.topology.heartbeat_interval, cfg.topology.staleness_intervals}),
      store_(overlay_, repo_, RngStream(cfg.seed, "replication"), ReplicationParams{cfg.topology.replicas, {}}),
      dsr_(store_, overlay_, cfg.topology.replicas),
      layer_(sim_, overlay_, ledger_, repo_, store_, dsr_, RngStream(cfg.seed, "services"), service_params(cfg)),
      evolution_(cfg.evolution.theta) {
    validate(cfg_);
    for (const auto& c : cfg_.population) {
        if (c.lanes > c.capacity.compute) {
            throw Error(ErrorCode::ConfigError, "[population] " + c.name + ".lanes: exceeds compute capacity");
        }
    }
    for (const auto& r : cfg_.evolution.releases) {
        if (r.origin >= cfg_.node_count()) {
            throw Error(ErrorCode::ConfigError, "[evolution] release " + r.version + ": origin out of range");
        }
    }

    RngStream identity(cfg_.seed, "identity");
    std::set<NodeId> seen;
    std::size_t index = 0;
    for (const auto& c : cfg_.population) {
        const UptimeSchedule uptime{c.mean_online / cfg_.failures.churn_multiplier, c.mean_offline};
        for (std::size_t k = 0; k < c.count; ++k, ++index) {
            NodeId id = generate_identity(identity);
            while (!seen.insert(id).second) id = generate_identity(identity);
            ids_.push_back(id);
            churn_online_.push_back(true);
            killed_.push_back(0);
            churn_rng_.emplace_back(cfg_.seed, "churn/" + std::to_string(index));

            NodeRecord rec;
            rec.id = id;
            rec.capacity = c.capacity;
            rec.region = c.region;
            rec.uptime = uptime;
            rec.lanes = c.lanes;
            overlay_.add_node(rec);
            logs_.nodes.push_back(NodeRow{index, id, c.region, c.capacity, c.lanes, community()});

            NodeResourceRecord rr;
            rr.id = id;
            rr.free_capacity = c.capacity;
            rr.cost_factor = c.cost_factor;
            rr.region = c.region;
            repo_.register_node(rr);
            ledger_.open_account(id, c.balance, c.credit_limit);
        }
    }
    if (!community()) {
        logs_.nodes.push_back(
            NodeRow{ids_.size(), vendor_id(), "vendor", cfg_.vendor.capacity, cfg_.vendor.lanes, true});
        vendor_lanes_.assign(cfg_.vendor.lanes, SimTime{});
    }
    for (const auto& s : cfg_.services.catalog) ledger_.open_account(developer_of(s.id), s.developer_balance, 0);

    // Trust: a ring keeps the graph strongly connected, plus random extra links.
    RngStream trust(cfg_.seed, "trust");
    const auto n = ids_.size();
    for (std::size_t i = 0; i < n; ++i) {
        std::set<NodeId> t;
        if (n > 1) t.insert(ids_[(i + 1) % n]);
        const auto want = std::min(cfg_.evolution.trust_degree, n - 1);
        while (t.size() < want) {
            const auto j = trust.uniform_below(n);
            if (j != i) t.insert(ids_[j]);
        }
        evolution_.set_trust(ids_[i], t);
    }
    for (const auto& s : cfg_.services.catalog) {
        evolution_.add_root(VersionNode{s.version, std::nullopt, s.id, s.fitness, SimTime{}});
        for (const auto& id : ids_) evolution_.install(id, s.version);
    }

    resolve_kills();
    workload_ = generate_workload(cfg_);
}

void World::resolve_kills() {
    const auto n = ids_.size();
    for (std::size_t k = 0; k < cfg_.failures.kills.size(); ++k) {
        const auto& spec = cfg_.failures.kills[k];
        std::vector<std::size_t> targets;
        const auto colon = spec.target.find(':');
        const auto kind = spec.target.substr(0, colon);
        const auto arg = colon == std::string::npos ? std::string{} : spec.target.substr(colon + 1);
        auto unknown = [&] { throw Error(ErrorCode::UnknownTarget, "[failures] kill." + std::to_string(k + 1) + ": " + spec.target); };
        if (spec.target == "vendor") {
            // Only meaningful in vendor mode; the community has no central node.
        } else if (kind == "node") {
            std::size_t i = 0;
            try {
                i = std::stoull(arg);
            } catch (const std::exception&) {
                unknown();
            }
            if (i >= n) unknown();
            targets.push_back(i);
        } else if (kind == "region") {
            for (std::size_t i = 0; i < n; ++i) {
                if (overlay_.record(ids_[i]).region == arg) targets.push_back(i);
            }
            if (targets.empty()) unknown();
        } else if (kind == "fraction") {
            double f = -1;
            try {
                f = std::stod(arg);
            } catch (const std::exception&) {
                unknown();
            }
            if (!(f >= 0 && f <= 1)) unknown();
            const auto m = static_cast<std::size_t>(std::floor(f * static_cast<double>(n)));
            std::vector<std::size_t> all(n);
            for (std::size_t i = 0; i < n; ++i) all[i] = i;
            RngStream rng(cfg_.seed, "failures/" + std::to_string(k));
            for (std::size_t i = 0; i < m; ++i) {
                const auto j = i + rng.uniform_below(n - i);
                std::swap(all[i], all[j]);
            }
            targets.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(m));
            std::sort(targets.begin(), targets.end());
        } else {
            unknown();
        }
        kills_.emplace_back(spec, std::move(targets));
    }
}

template <typename Fn>
void World::every(std::uint64_t interval, EventKind kind, Fn fn) {
    sim_.schedule(now() + interval, kind, [this, interval, kind, fn] {
        fn();
        every(interval, kind, fn);
    });
}

void World::bootstrap() {
    overlay_.build_topology();
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        overlay_.join(ids_[i], now());
        logs_.membership.push_back(MembershipRow{0, ids_[i], true, "bootstrap"});
    }
    if (!community()) set_vendor(true, "bootstrap");
    for (const auto& r : overlay_.regions()) overlay_.form_dvsp(r, now());
    heartbeat_tick();
    repo_.refresh_costs(ledger_.prices());

    if (community()) {
        for (const auto& s : cfg_.services.catalog) {
            ServiceDescriptor d{s.id, s.version, s.declared, s.subsidy, s.code_size, s.min_replicas, developer_of(s.id)};
            dsr_.publish(d, "code:" + s.id + "@" + s.version, ids_.front(), now());
            layer_.register_service(d);
        }
        layer_.deploy_initial(now());
        if (cfg_.workload.wiki.rate > 0) {
            for (std::size_t p = 0; p < cfg_.workload.wiki.pages; ++p) {
                const auto& set = store_.create(page_key(p), now(), cfg_.workload.wiki.page_size);
                const auto host = set.hosts.front();
                store_.put_at(page_key(p), host, "rev:0", host, now());
            }
        }
    }

    for (std::size_t i = 0; i < ids_.size(); ++i) schedule_churn(i, true);
    for (const auto& [spec, targets] : kills_) {
        const auto& t = targets;
        const bool vendor = spec.target == "vendor";
        sim_.schedule(SimTime{spec.at}, EventKind::FailureInjection, [this, t, vendor] {
            if (vendor && !community() && vendor_down_++ == 0) set_vendor(false, "kill");
            for (auto i : t) {
                ++killed_[i];
                apply_state(i, "kill");
            }
        });
        sim_.schedule(SimTime{spec.until}, EventKind::FailureInjection, [this, t, vendor] {
            if (vendor && !community() && --vendor_down_ == 0) set_vendor(true, "restore");
            for (auto i : t) {
                --killed_[i];
                apply_state(i, "restore");
            }
        });
    }
    for (const auto& r : cfg_.evolution.releases) {
        sim_.schedule(SimTime{r.at}, EventKind::AdoptionTick, [this, r] {
            const NodeId origin = ids_[r.origin];
            std::optional<std::string> parent;
            if (!r.parent.empty() && r.parent != "-") parent = r.parent;
            evolution_.release(VersionNode{r.version, parent, r.service, r.fitness, now()}, std::span(&origin, 1), now());
        });
    }
    for (const auto& w : workload_) {
        sim_.schedule(w.at, EventKind::RequestArrival, [this, &w] { issue(w); });
    }

    const auto& t = cfg_.topology;
    every(t.heartbeat_interval, EventKind::Heartbeat, [this] { heartbeat_tick(); });
    every(t.gossip_interval, EventKind::GossipRound, [this] { gossip_tick(); });
    every(t.gossip_interval, EventKind::AdoptionTick, [this] {
        evolution_.adoption_round(now(), [this](const NodeId& id) { return overlay_.is_online(id); });
    });
    if (community()) {
        every(cfg_.market.price_interval, EventKind::PriceTick, [this] { price_tick(); });
        every(cfg_.services.placement_window, EventKind::PlacementTick, [this] { layer_.placement_tick(now()); });
    }
    if (cfg_.workload.video.rate > 0) {
        every(cfg_.workload.video.stream_interval, EventKind::StreamTick, [this] { stream_tick(); });
    }
}

void World::schedule_churn(std::size_t i, bool currently_online) {
    const auto& uptime = overlay_.record(ids_[i]).uptime;
    if (uptime.always_on()) return;
    auto& rng = churn_rng_[i];
    const double mean = currently_online ? uptime.mean_online : uptime.mean_offline;
    const auto delay = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::ceil(rng.exponential(mean))));
    const auto kind = currently_online ? EventKind::NodeLeave : EventKind::NodeJoin;
    sim_.schedule_in(delay, kind, [this, i, currently_online] {
        churn_online_[i] = !currently_online;
        apply_state(i, "churn");
        schedule_churn(i, !currently_online);
    });
}

void World::apply_state(std::size_t i, const std::string& cause) {
    const auto& id = ids_[i];
    const bool want = churn_online_[i] && killed_[i] == 0;
    const bool is = overlay_.is_online(id);
    if (want == is) return;
    if (want) {
        overlay_.join(id, now());
        store_.on_join(id, now());
    } else {
        overlay_.leave(id, now());
        layer_.on_node_leave(id, now());
    }
    logs_.membership.push_back(MembershipRow{now().ticks, id, want, cause});
}

void World::set_vendor(bool up, const std::string& cause) {
    logs_.membership.push_back(MembershipRow{now().ticks, vendor_id(), up, cause});
    if (!up) vendor_lanes_.assign(cfg_.vendor.lanes, SimTime{});
}

void World::heartbeat_tick() {
    for (const auto& id : ids_) {
        if (!overlay_.is_online(id)) {
            repo_.miss(id);
            continue;
        }
        Resources free = overlay_.record(id).capacity;
        free.storage = std::max<std::int64_t>(0, free.storage - store_.storage_used(id) - layer_.storage_used(id));
        repo_.heartbeat(id, free, now());
    }
}

void World::gossip_tick() {
    overlay_.gossip_tick(now());
    for (const auto& r : overlay_.regions()) {
        const auto* vsp = overlay_.dvsp(r);
        repo_.set_partition_available(r, vsp != nullptr && !vsp->members.empty() && overlay_.has_quorum(*vsp));
    }
    if (community()) {
        store_.rereplicate(now());
        store_.gossip_dirty(now());
    }
    for (const auto& s : cfg_.services.catalog) {
        bool up = false;
        if (community()) {
            up = layer_.available_instances(s.id, now()) > 0 || dsr_.resolvable(s.id);
        } else {
            up = vendor_down_ == 0;
        }
        logs_.status.push_back(StatusRow{now().ticks, s.id, up});
    }
}

void World::price_tick() {
    Resources supply;
    const auto interval = static_cast<std::int64_t>(cfg_.market.price_interval);
    for (const auto& id : ids_) {
        if (!overlay_.is_online(id)) continue;
        const auto& cap = overlay_.record(id).capacity;
        supply.compute += cap.compute * interval;
        supply.bandwidth += cap.bandwidth * interval;
        supply.storage += cap.storage;
    }
    ledger_.update_prices(demand_, supply);
    repo_.refresh_costs(ledger_.prices());
    demand_ = Resources{};
}

// --- requests ----------------------------------------------------------------

void World::issue(const WorkItem& w) {
    RequestRow row;
    row.id = w.id;
    row.kind = w.kind;
    row.issued_at = now().ticks;
    row.requester = ids_[w.requester];
    row.region = overlay_.record(row.requester).region;
    row.service = w.service;
    row.declared = cfg_.service(w.service).declared;
    const auto idx = logs_.requests.size();
    logs_.requests.push_back(row);
    if (!overlay_.is_online(row.requester)) {
        logs_.requests[idx].outcome = "dropped";
        logs_.requests[idx].finished_at = now().ticks;
        return;
    }
    inflight_.insert(idx);
    if (!community()) {
        issue_vendor(w, idx);
        return;
    }
    Request req;
    req.id = w.id;
    req.requester = row.requester;
    req.service_id = w.service;
    req.actual_cost = w.actual;
    req.issued_at = now();
    if (w.kind != WorkKind::Video) req.read_key = page_key(w.page);
    auto early = layer_.invoke(req, [this, idx, &w](const InvocationResult& res) { finish(idx, w, res); });
    if (early) finish(idx, w, *early);
}

void World::issue_vendor(const WorkItem& w, std::size_t idx) {
    InvocationResult res;
    res.request_id = w.id;
    res.issued_at = now();
    res.declared = cfg_.service(w.service).declared;
    res.host = vendor_id();
    if (vendor_down_ > 0) {
        res.outcome = Outcome::Unreachable;
        res.finished_at = now();
        finish(idx, w, res);
        return;
    }
    const auto m = meter(res.declared, w.actual);
    const std::int64_t per_lane = std::max<std::int64_t>(1, cfg_.vendor.capacity.compute / cfg_.vendor.lanes);
    const auto duration = static_cast<std::uint64_t>((m.consumed.compute + per_lane - 1) / per_lane);
    const SimTime ready = now() + cfg_.vendor.latency;
    auto lane = std::min_element(vendor_lanes_.begin(), vendor_lanes_.end());
    const SimTime end = std::max(ready, *lane) + duration;
    *lane = end;
    sim_.schedule(end, EventKind::RequestCompletion, [this, idx, &w, res, m]() mutable {
        if (vendor_down_ > 0) {
            res.outcome = Outcome::HostLost;
            res.finished_at = now();
        } else {
            res.outcome = m.terminated ? Outcome::Terminated : Outcome::Completed;
            res.consumed = m.consumed;
            res.finished_at = now() + cfg_.vendor.latency;
            res.settled = true;
        }
        finish(idx, w, res);
    });
}

void World::finish(std::size_t idx, const WorkItem& w, const InvocationResult& res) {
    inflight_.erase(idx);
    auto& row = logs_.requests[idx];
    row.outcome = std::string(to_string(res.outcome));
    row.finished_at = res.finished_at.ticks;
    if (!res.host.is_issuer()) row.host = res.host;
    row.debit = res.requester_debit;
    row.credit = res.host_credit;
    row.subsidy = res.subsidy_part;
    row.consumed = res.consumed;
    row.settled = res.settled && community();
    row.pulled = res.pulled;
    if (res.outcome == Outcome::Completed || res.outcome == Outcome::Terminated) demand_ += res.consumed;
    if (res.outcome != Outcome::Completed) return;

    if (w.kind == WorkKind::WikiWrite && community()) {
        try {
            store_.put(page_key(w.page), "rev:" + std::to_string(w.id), row.requester, now());
        } catch (const Error& e) {
            if (e.code() != ErrorCode::Unreachable) throw;
            row.outcome = std::string(to_string(Outcome::Unreachable));
        }
    } else if (w.kind == WorkKind::Video) {
        start_session(w, res.host);
    }
}

// --- streaming ---------------------------------------------------------------

void World::start_session(const WorkItem& w, const NodeId& host) {
    Session s;
    s.requester = w.requester;
    s.service = w.service;
    s.host = host;
    s.end = now().ticks + w.duration;
    s.row.id = w.id;
    s.row.requester = ids_[w.requester];
    s.row.started_at = now().ticks;
    sessions_.emplace(w.id, std::move(s));
}

bool World::serving(const NodeId& host, const NodeId& requester) {
    if (!community()) return vendor_down_ == 0;
    return overlay_.is_online(host) && overlay_.try_route(host, requester, 0, now()).has_value();
}

std::optional<NodeId> World::failover(const std::string& service, const NodeId& requester) {
    if (!community()) return std::nullopt;
    std::optional<NodeId> best;
    std::optional<SimTime> best_at;
    for (const auto* inst : layer_.instances(service)) {
        if (inst->warm_at > now() || !overlay_.is_online(inst->host)) continue;
        auto t = overlay_.try_route(inst->host, requester, 0, now());
        if (!t) continue;
        if (!best_at || *t < *best_at || (*t == *best_at && inst->host < *best)) {
            best = inst->host;
            best_at = t;
        }
    }
    return best;
}

void World::stream_tick() {
    const auto& v = cfg_.workload.video;
    auto close = [this](Session& s, const std::string& outcome) {
        s.row.ended_at = now().ticks;
        s.row.outcome = outcome;
        logs_.sessions.push_back(s.row);
    };
    std::map<NodeId, std::int64_t> load;
    for (auto it = sessions_.begin(); it != sessions_.end();) {
        auto& s = it->second;
        if (now().ticks >= s.end) {
            close(s, "completed");
            it = sessions_.erase(it);
            continue;
        }
        const auto& requester = ids_[s.requester];
        if (!overlay_.is_online(requester)) {
            close(s, "dropped");
            it = sessions_.erase(it);
            continue;
        }
        if (!s.host || !serving(*s.host, requester)) {
            s.host = failover(s.service, requester);
            if (s.host) ++s.row.failovers;
        }
        if (s.host) ++load[*s.host];
        ++it;
    }
    for (auto it = sessions_.begin(); it != sessions_.end();) {
        auto& s = it->second;
        std::int64_t delivered = 0;
        if (s.host) {
            const auto bw = community() ? overlay_.record(*s.host).capacity.bandwidth : cfg_.vendor.capacity.bandwidth;
            delivered = std::min(v.bitrate, bw / load[*s.host]);
        }
        if (static_cast<double>(delivered) < v.floor * static_cast<double>(v.bitrate)) {
            ++s.row.low_ticks;
            if (++s.low_streak >= v.sustain) {
                close(s, "failed");
                it = sessions_.erase(it);
                continue;
            }
        } else {
            s.low_streak = 0;
        }
        ++it;
    }
}

// --- results -----------------------------------------------------------------

RunResult World::run() {
    sim_.schedule(SimTime{0}, EventKind::Bootstrap, [this] { bootstrap(); });
    const auto summary = sim_.run(SimTime{cfg_.horizon});
    for (auto idx : inflight_) {
        logs_.requests[idx].outcome = "unfinished";
        logs_.requests[idx].finished_at = cfg_.horizon;
    }
    for (auto& [id, s] : sessions_) {
        s.row.ended_at = cfg_.horizon;
        s.row.outcome = "open";
        logs_.sessions.push_back(s.row);
    }
    std::sort(logs_.sessions.begin(), logs_.sessions.end(),
              [](const SessionRow& a, const SessionRow& b) { return a.id < b.id; });

    RunResult out = collect();
    out.audit.events = summary;
    out.report["audit"]["events"] = nlohmann::json::object();
    for (std::size_t k = 0; k < kEventKindCount; ++k) {
        out.report["audit"]["events"][std::string(to_string(static_cast<EventKind>(k)))] = summary.per_kind[k];
    }
    return out;
}

RunResult World::collect() {
    logs_.transfers = ledger_.log();
    logs_.placements = layer_.placement_log();
    logs_.adoptions = evolution_.log();

    for (const auto& w : store_.writes()) {
        ConvergenceRow c{w.key, w.writer, w.at.ticks, std::nullopt, std::nullopt};
        if (w.agreed_at) c.agreed_at = w.agreed_at->ticks;
        if (w.quiesced_at) c.quiesced_at = w.quiesced_at->ticks;
        logs_.convergence.push_back(std::move(c));
    }

    RunResult r;
    r.cfg = cfg_;
    auto& a = r.audit;
    a.minted = ledger_.minted();
    a.burned = ledger_.burned();
    a.currency_drift = ledger_.total_balance() - (ledger_.initial_total() + a.minted - a.burned);
    a.replay_exact = Ledger::replay(ledger_.initial_balances(), ledger_.log()) == ledger_.balances();
    a.privacy_rejections = store_.privacy_rejections();
    a.lost_writes = store_.lost_writes();
    a.min_floor_slack = ledger_.min_floor_slack();
    a.safety_margin = layer_.min_safety_margin();
    if (community() && !cfg_.market.minting) {
        for (const auto& row : logs_.requests) {
            if (row.settled && row.debit + row.subsidy != row.credit) ++a.payment_identity_violations;
        }
    }
    r.logs = std::move(logs_);
    r.report = compute_metrics(cfg_, r.logs);
    auto& j = r.report["audit"];
    j["currency_drift"] = a.currency_drift;
    j["replay_exact"] = a.replay_exact;
    j["privacy_rejections"] = a.privacy_rejections;
    j["lost_writes"] = a.lost_writes;
    j["min_floor_slack"] = a.min_floor_slack;
    j["safety_margin"] = a.safety_margin;
    j["payment_identity_violations"] = a.payment_identity_violations;
    j["minted"] = a.minted;
    j["burned"] = a.burned;
    j["final_prices"] = {{"compute", ledger_.prices().micro(ResourceKind::Compute)},
                         {"storage", ledger_.prices().micro(ResourceKind::Storage)},
                         {"bandwidth", ledger_.prices().micro(ResourceKind::Bandwidth)}};
    return r;
}

}  // namespace

RunResult run_scenario(const ScenarioConfig& cfg) {
    auto world = std::make_unique<World>(cfg);
    return world->run();
}

// --- metrics -----------------------------------------------------------------

namespace {

nlohmann::json fraction(std::uint64_t num, std::uint64_t den) {
    if (den == 0) return nullptr;
    return static_cast<double>(num) / static_cast<double>(den);
}

std::uint64_t nearest_rank(const std::vector<std::uint64_t>& sorted, int pct) {
    if (sorted.empty()) return 0;
    const auto n = sorted.size();
    auto rank = (static_cast<std::size_t>(pct) * n + 99) / 100;
    if (rank == 0) rank = 1;
    return sorted[rank - 1];
}

}  // namespace

nlohmann::json compute_metrics(const ScenarioConfig& cfg, const Logs& logs) {
    using nlohmann::json;
    json r;
    r["scenario"] = cfg.name;
    r["mode"] = std::string(to_string(cfg.mode));
    r["seed"] = cfg.seed;
    r["horizon"] = cfg.horizon;

    std::map<std::string, std::uint64_t> outcomes{{"completed", 0},          {"terminated", 0}, {"insufficient_funds", 0},
                                                  {"unreachable", 0},        {"host_lost", 0},  {"dropped", 0},
                                                  {"unfinished", 0}};
    std::vector<std::uint64_t> latency;
    std::uint64_t consumed_compute = 0;
    for (const auto& row : logs.requests) {
        ++outcomes[row.outcome];
        if (row.outcome == "completed") latency.push_back(row.finished_at - row.issued_at);
        if (row.outcome == "completed" || row.outcome == "terminated") {
            consumed_compute += static_cast<std::uint64_t>(row.consumed.compute);
        }
    }
    const auto total = logs.requests.size();
    const auto served = total - outcomes["dropped"];
    json req = outcomes;
    req["total"] = total;
    r["requests"] = req;
    r["availability"] = fraction(outcomes["completed"], served);
    std::sort(latency.begin(), latency.end());
    r["latency"] = {{"p50", nearest_rank(latency, 50)}, {"p95", nearest_rank(latency, 95)}, {"p99", nearest_rank(latency, 99)}};
    r["currency_velocity"] = static_cast<double>(logs.transfers.size()) * 1e6 / static_cast<double>(cfg.horizon);

    // Capacity-time of serving nodes from the membership log.
    std::map<NodeId, std::int64_t> rate;
    for (const auto& n : logs.nodes) {
        if (n.serves) rate[n.id] = n.capacity.compute;
    }
    std::map<NodeId, std::uint64_t> since;
    std::uint64_t capacity_time = 0;
    for (const auto& m : logs.membership) {
        auto it = rate.find(m.node);
        if (it == rate.end()) continue;
        if (m.joined) {
            since[m.node] = m.at;
        } else if (auto s = since.find(m.node); s != since.end()) {
            capacity_time += static_cast<std::uint64_t>(it->second) * (m.at - s->second);
            since.erase(s);
        }
    }
    for (const auto& [id, s] : since) capacity_time += static_cast<std::uint64_t>(rate[id]) * (cfg.horizon - s);
    r["utilisation"] = capacity_time == 0 ? 0.0 : static_cast<double>(consumed_compute) / static_cast<double>(capacity_time);

    std::map<std::uint64_t, std::uint64_t> down;
    for (const auto& s : logs.status) down[s.at] += s.available ? 0 : 1;
    std::uint64_t cascade = 0;
    for (const auto& [at, n] : down) cascade = std::max(cascade, n);
    r["cascade_size"] = cascade;

    std::uint64_t shortfalls = 0;
    for (const auto& p : logs.placements) shortfalls += p.action == "shortfall" ? 1 : 0;
    r["placement_shortfalls"] = shortfalls;

    std::uint64_t lag = 0, rounds = 0, unagreed = 0;
    const auto g = cfg.topology.gossip_interval;
    for (const auto& c : logs.convergence) {
        if (!c.agreed_at) {
            ++unagreed;
            continue;
        }
        lag = std::max(lag, *c.agreed_at - c.at);
        rounds = std::max(rounds, *c.agreed_at / g - *c.quiesced_at / g);
    }
    r["convergence_lag"] = lag;
    r["convergence"] = {{"writes", logs.convergence.size()}, {"unagreed", unagreed}, {"max_rounds_after_quiescence", rounds}};

    json windows = json::array();
    for (const auto& k : cfg.failures.kills) {
        std::uint64_t n = 0, ok = 0;
        for (const auto& row : logs.requests) {
            if (row.issued_at < k.at || row.issued_at >= k.until || row.outcome == "dropped") continue;
            ++n;
            ok += row.outcome == "completed" ? 1 : 0;
        }
        windows.push_back({{"target", k.target}, {"at", k.at}, {"until", k.until}, {"requests", n}, {"availability", fraction(ok, n)}});
    }
    r["windows"] = windows;

    std::map<std::string, std::uint64_t> sessions{{"completed", 0}, {"failed", 0}, {"dropped", 0}, {"open", 0}};
    for (const auto& s : logs.sessions) ++sessions[s.outcome];
    json sj = sessions;
    sj["started"] = logs.sessions.size();
    r["sessions"] = sj;

    // Adoption of released versions: every node starts on its service's root.
    const auto nodes = static_cast<std::uint64_t>(std::count_if(logs.nodes.begin(), logs.nodes.end(),
                                                                [&](const NodeRow& n) { return n.index < cfg.node_count(); }));
    std::map<std::string, std::uint64_t> holders;
    for (const auto& s : cfg.services.catalog) holders[s.version] += nodes;
    std::map<std::string, std::uint64_t> full_at;
    for (const auto& a : logs.adoptions) {
        if (!a.from_version.empty()) --holders[a.from_version];
        if (++holders[a.to_version] == nodes && full_at.count(a.to_version) == 0) full_at[a.to_version] = a.at.ticks;
    }
    json evo = json::object();
    for (const auto& rel : cfg.evolution.releases) {
        evo[rel.version] = {{"adopted", fraction(holders[rel.version], nodes)},
                            {"full_adoption_at", full_at.count(rel.version) ? json(full_at[rel.version]) : json(nullptr)}};
    }
    r["evolution"] = evo;
    return r;
}

std::vector<std::string> check_invariants(const RunResult& result) {
    std::vector<std::string> v;
    const auto& a = result.audit;
    if (a.currency_drift != 0) v.push_back("currency drift " + std::to_string(a.currency_drift));
    if (!a.replay_exact) v.push_back("transfer log replay does not reproduce final balances");
    if (a.min_floor_slack < 0) v.push_back("an account went below its credit floor");
    if (a.privacy_rejections != 0) v.push_back("privacy gate rejected " + std::to_string(a.privacy_rejections) + " reads");
    if (a.lost_writes != 0) v.push_back(std::to_string(a.lost_writes) + " acknowledged writes lost");
    if (a.payment_identity_violations != 0) {
        v.push_back(std::to_string(a.payment_identity_violations) + " settlements break the payment identity");
    }
    if (result.cfg.mode == Mode::Community && result.cfg.services.push && a.safety_margin < 0) {
        v.push_back("instances fell below min(min_replicas, eligible nodes)");
    }
    auto in_unit = [&](const nlohmann::json& x, const std::string& name) {
        if (x.is_number() && (x.get<double>() < 0.0 || x.get<double>() > 1.0)) v.push_back(name + " outside [0,1]");
    };
    in_unit(result.report["availability"], "availability");
    in_unit(result.report["utilisation"], "utilisation");
    for (const auto& w : result.report["windows"]) in_unit(w["availability"], "window availability");
    return v;
}

// --- output ------------------------------------------------------------------

namespace {

void flatten(const nlohmann::json& j, const std::string& prefix, std::ostream& out) {
    if (j.is_object()) {
        for (auto it = j.begin(); it != j.end(); ++it) flatten(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), out);
    } else if (j.is_array()) {
        for (std::size_t i = 0; i < j.size(); ++i) flatten(j[i], prefix + "." + std::to_string(i), out);
    } else {
        out << prefix << ',' << (j.is_string() ? j.get<std::string>() : j.dump()) << '\n';
    }
}

std::string hex_or_empty(const std::optional<NodeId>& id) { return id ? id->hex() : std::string{}; }

template <typename T>
std::string opt(const std::optional<T>& x) {
    return x ? std::to_string(*x) : std::string{};
}

void write_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << text;
}

}  // namespace

std::string render_report(const nlohmann::json& report, ReportFormat format) {
    if (format == ReportFormat::Json) return report.dump(2) + "\n";
    std::ostringstream out;
    out << "key,value\n";
    flatten(report, "", out);
    return out.str();
}

void write_outputs(const RunResult& result, const std::filesystem::path& dir, ReportFormat format) {
    std::filesystem::create_directories(dir);
    const auto& L = result.logs;
    write_file(dir / (format == ReportFormat::Json ? "report.json" : "report.csv"), render_report(result.report, format));
    write_file(dir / "config.cfg", serialize(result.cfg));

    std::ostringstream o;
    o << "index,id,region,compute,storage,bandwidth,lanes,serves\n";
    for (const auto& n : L.nodes) {
        o << n.index << ',' << n.id.hex() << ',' << n.region << ',' << n.capacity.compute << ',' << n.capacity.storage
          << ',' << n.capacity.bandwidth << ',' << n.lanes << ',' << (n.serves ? 1 : 0) << '\n';
    }
    write_file(dir / "nodes.csv", o.str());

    o.str("");
    o << "at,node,event,cause\n";
    for (const auto& m : L.membership) o << m.at << ',' << m.node.hex() << ',' << (m.joined ? "join" : "leave") << ',' << m.cause << '\n';
    write_file(dir / "membership.csv", o.str());

    o.str("");
    o << "id,kind,issued_at,requester,region,service,host,outcome,finished_at,latency,debit,credit,subsidy,"
         "declared_compute,declared_storage,declared_bandwidth,consumed_compute,consumed_storage,consumed_bandwidth,"
         "settled,pulled\n";
    for (const auto& r : L.requests) {
        o << r.id << ',' << to_string(r.kind) << ',' << r.issued_at << ',' << r.requester.hex() << ',' << r.region << ','
          << r.service << ',' << hex_or_empty(r.host) << ',' << r.outcome << ',' << r.finished_at << ','
          << r.finished_at - r.issued_at << ',' << r.debit << ',' << r.credit << ',' << r.subsidy << ','
          << r.declared.compute << ',' << r.declared.storage << ',' << r.declared.bandwidth << ',' << r.consumed.compute
          << ',' << r.consumed.storage << ',' << r.consumed.bandwidth << ',' << (r.settled ? 1 : 0) << ','
          << (r.pulled ? 1 : 0) << '\n';
    }
    write_file(dir / "requests.csv", o.str());

    o.str("");
    o << "at,from,to,amount,reason\n";
    for (const auto& t : L.transfers) {
        o << t.at.ticks << ',' << t.from.hex() << ',' << t.to.hex() << ',' << t.amount << ',' << to_string(t.reason) << '\n';
    }
    write_file(dir / "transfers.csv", o.str());

    o.str("");
    o << "at,service_id,action,host,region\n";
    for (const auto& p : L.placements) {
        o << p.at.ticks << ',' << p.service_id << ',' << p.action << ',' << hex_or_empty(p.host) << ',' << p.region << '\n';
    }
    write_file(dir / "placements.csv", o.str());

    o.str("");
    o << "at,node,service_id,from_version,to_version\n";
    for (const auto& a : L.adoptions) {
        o << a.at.ticks << ',' << a.node.hex() << ',' << a.service_id << ',' << a.from_version << ',' << a.to_version << '\n';
    }
    write_file(dir / "adoptions.csv", o.str());

    o.str("");
    o << "at,service,available\n";
    for (const auto& s : L.status) o << s.at << ',' << s.service << ',' << (s.available ? 1 : 0) << '\n';
    write_file(dir / "service_status.csv", o.str());

    o.str("");
    o << "key,writer,at,agreed_at,quiesced_at\n";
    for (const auto& c : L.convergence) {
        o << c.key << ',' << c.writer.hex() << ',' << c.at << ',' << opt(c.agreed_at) << ',' << opt(c.quiesced_at) << '\n';
    }
    write_file(dir / "convergence.csv", o.str());

    o.str("");
    o << "id,requester,started_at,ended_at,outcome,low_ticks,failovers\n";
    for (const auto& s : L.sessions) {
        o << s.id << ',' << s.requester.hex() << ',' << s.started_at << ',' << s.ended_at << ',' << s.outcome << ','
          << s.low_ticks << ',' << s.failovers << '\n';
    }
    write_file(dir / "sessions.csv", o.str());
}

std::vector<RunResult> run_sweep(const ScenarioConfig& cfg, std::uint64_t first_seed, std::size_t count,
                                 std::size_t threads) {
    std::vector<std::optional<RunResult>> slots(count);
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < count;) {
            try {
                auto c = cfg;
                c.seed = first_seed + i;
                slots[i] = run_scenario(c);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < std::max<std::size_t>(1, std::min(threads, count)); ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    std::vector<RunResult> out;
    for (std::size_t i = 0; i < count; ++i) {
        if (errors[i]) std::rethrow_exception(errors[i]);
        out.push_back(std::move(*slots[i]));
    }
    return out;
}

}  // namespace c3
