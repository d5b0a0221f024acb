#include "c3/services.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <set>
#include <sstream>

#include "c3/error.hpp"

namespace c3 {

std::string_view to_string(Outcome outcome) noexcept {
    switch (outcome) {
        case Outcome::Completed: return "completed";
        case Outcome::Terminated: return "terminated";
        case Outcome::InsufficientFunds: return "insufficient_funds";
        case Outcome::Unreachable: return "unreachable";
        case Outcome::HostLost: return "host_lost";
    }
    return "?";
}

// --- descriptors -------------------------------------------------------------

std::string serialize(const ServiceDescriptor& d, std::string_view code_ref) {
    std::ostringstream out;
    out << "service=" << d.service_id << ";version=" << d.version << ";compute=" << d.declared_cost.compute
        << ";storage=" << d.declared_cost.storage << ";bandwidth=" << d.declared_cost.bandwidth
        << ";subsidy=" << d.subsidy << ";code_size=" << d.code_size << ";min_replicas=" << d.min_replicas
        << ";developer=" << d.developer.hex() << ";code=" << code_ref;
    return out.str();
}

ServiceDescriptor parse_descriptor(std::string_view text) {
    ServiceDescriptor d;
    while (!text.empty()) {
        const auto end = text.find(';');
        const auto field = text.substr(0, end);
        text = end == std::string_view::npos ? std::string_view{} : text.substr(end + 1);
        const auto eq = field.find('=');
        if (eq == std::string_view::npos) throw Error(ErrorCode::InvalidArgument, "malformed descriptor field");
        const std::string key(field.substr(0, eq));
        const std::string value(field.substr(eq + 1));
        if (key == "service") d.service_id = value;
        else if (key == "version") d.version = value;
        else if (key == "compute") d.declared_cost.compute = std::stoll(value);
        else if (key == "storage") d.declared_cost.storage = std::stoll(value);
        else if (key == "bandwidth") d.declared_cost.bandwidth = std::stoll(value);
        else if (key == "subsidy") d.subsidy = std::stoll(value);
        else if (key == "code_size") d.code_size = std::stoll(value);
        else if (key == "min_replicas") d.min_replicas = std::stoull(value);
        else if (key == "developer") d.developer = NodeId::from_hex(value);
    }
    return d;
}

// --- DSR ---------------------------------------------------------------------

std::string ServiceRepository::key_for(std::string_view service_id, std::string_view version) {
    std::string key = "dsr/";
    key += service_id;
    key += '@';
    key += version;
    return key;
}

std::string ServiceRepository::publish(const ServiceDescriptor& desc, std::string_view code_ref,
                                       const NodeId& publisher, SimTime now) {
    if (desc.min_replicas == 0 || !desc.declared_cost.non_negative() || desc.subsidy < 0 || desc.code_size < 0) {
        throw Error(ErrorCode::InvalidArgument, "invalid descriptor for " + desc.service_id);
    }
    const auto key = key_for(desc.service_id, desc.version);
    const auto text = serialize(desc, code_ref);
    store_.create(key, now, std::max<std::int64_t>(desc.code_size, 1), std::nullopt, replicas_);
    bool stored = false;
    for (const auto& h : store_.replica_set(key).hosts) {
        const auto* s = store_.state_at(key, h);
        if (s != nullptr && s->present && s->payload == text) stored = true;
    }
    if (!stored) {
        // The publisher uploads to every replica, so a fresh descriptor does
        // not depend on gossip to become resolvable.
        const auto first = store_.nearest_replica(key, publisher, now);
        store_.put(key, text, publisher, now);
        for (const auto& h : store_.replica_set(key).hosts) {
            if (first && h != *first && overlay_.is_online(h)) store_.exchange(key, *first, h, now);
        }
    }
    auto& v = versions_[desc.service_id];
    if (std::find(v.begin(), v.end(), desc.version) == v.end()) v.push_back(desc.version);
    return key;
}

const std::string& ServiceRepository::latest_version(const std::string& service_id) const {
    auto it = versions_.find(service_id);
    if (it == versions_.end() || it->second.empty()) throw Error(ErrorCode::InvalidArgument, "unknown service " + service_id);
    return it->second.back();
}

std::optional<ServiceDescriptor> ServiceRepository::resolve(const std::string& service_id, const NodeId& from,
                                                            SimTime now, const std::optional<std::string>& version) {
    if (versions_.count(service_id) == 0) return std::nullopt;
    const auto key = key_for(service_id, version.value_or(latest_version(service_id)));
    if (!store_.has_key(key)) return std::nullopt;
    const auto r = store_.read(key, from, now);
    if (r.status != ReadResult::Status::Ok) return std::nullopt;
    return parse_descriptor(r.payload);
}

std::optional<NodeId> ServiceRepository::code_holder(const std::string& service_id, const NodeId& from, SimTime now) {
    if (versions_.count(service_id) == 0) return std::nullopt;
    const auto key = key_for(service_id, latest_version(service_id));
    std::optional<NodeId> best;
    std::optional<SimTime> best_at;
    for (const auto& h : store_.replica_set(key).hosts) {
        const auto* s = store_.state_at(key, h);
        if (s == nullptr || !s->present) continue;
        auto t = overlay_.try_route(from, h, 0, now);
        if (!t) continue;
        if (!best_at || *t < *best_at || (*t == *best_at && h < *best)) {
            best = h;
            best_at = t;
        }
    }
    return best;
}

bool ServiceRepository::resolvable(const std::string& service_id) const {
    auto it = versions_.find(service_id);
    if (it == versions_.end()) return false;
    const auto key = key_for(service_id, it->second.back());
    for (const auto& h : store_.replica_set(key).hosts) {
        const auto* s = store_.state_at(key, h);
        if (s != nullptr && s->present && overlay_.is_online(h)) return true;
    }
    return false;
}

std::vector<std::string> ServiceRepository::services() const {
    std::vector<std::string> out;
    for (const auto& [id, v] : versions_) out.push_back(id);
    return out;
}

std::size_t ServiceRepository::entry_count() const {
    std::size_t n = 0;
    for (const auto& [id, v] : versions_) n += v.size();
    return n;
}

// --- pricing and metering ----------------------------------------------------

Quote quote_request(const Ledger& ledger, const ServiceDescriptor& desc) {
    Quote q;
    q.gross = ledger.quote(desc.declared_cost);
    q.subsidy_part = std::min(desc.subsidy, q.gross);
    q.requester_part = q.gross - q.subsidy_part;
    return q;
}

Metering meter(const Resources& declared, const Resources& actual) {
    if (!declared.non_negative() || !actual.non_negative()) {
        throw Error(ErrorCode::InvalidArgument, "costs must be non-negative");
    }
    Metering m;
    for (auto k : kAllResources) {
        if (actual[k] <= declared[k]) continue;
        // declared/actual < num/den  <=>  declared*den < num*actual
        if (!m.terminated || declared[k] * m.den < m.num * actual[k]) {
            m.terminated = true;
            m.num = declared[k];
            m.den = actual[k];
        }
    }
    for (auto k : kAllResources) m.consumed[k] = m.terminated ? actual[k] * m.num / m.den : actual[k];
    return m;
}

Quote prorate(const Quote& full, const Metering& m) {
    if (!m.terminated) return full;
    Quote q;
    q.gross = (full.gross * m.num + m.den - 1) / m.den;
    q.subsidy_part = std::min(full.subsidy_part, q.gross);
    q.requester_part = q.gross - q.subsidy_part;
    return q;
}

// --- content distribution ----------------------------------------------------

Distribution distribute_content(Overlay& overlay, const NodeId& origin, std::span<const NodeId> consumers,
                                std::int64_t size, bool repeaters, SimTime now) {
    Distribution d;
    d.arrival[origin] = now;
    std::vector<std::optional<SimTime>> reached(consumers.size());
    auto send = [&](const NodeId& from, SimTime at, std::size_t i) {
        auto t = overlay.try_route(from, consumers[i], size, at);
        if (!t) return false;
        d.egress[from] += size;
        reached[i] = *t;
        d.arrival[consumers[i]] = *t;
        return true;
    };
    for (std::size_t i = 0; i < consumers.size(); ++i) {
        bool ok = false;
        if (repeaters && i >= 2) {
            const auto parent = (i - 2) / 2;
            if (reached[parent]) ok = send(consumers[parent], *reached[parent], i);
        }
        if (!ok) ok = send(origin, now, i);
        if (!ok) d.unreachable.push_back(consumers[i]);
    }
    d.origin_egress = d.egress.count(origin) > 0 ? d.egress.at(origin) : 0;
    return d;
}

// --- ServiceLayer ------------------------------------------------------------

struct ServiceLayer::Pending {
    Request req;
    ServiceDescriptor desc;
    Quote reserved;
    Quote due;
    Metering metering;
    NodeId host;
    std::uint64_t host_incarnation = 0;
    bool pulled = false;
    Callback done;
};

ServiceLayer::ServiceLayer(Simulator& sim, Overlay& overlay, Ledger& ledger, ResourceRepository& repo,
                           ReplicatedStore& store, ServiceRepository& dsr, RngStream rng, ServiceParams params)
    : sim_(sim), overlay_(overlay), ledger_(ledger), repo_(repo), store_(store), dsr_(dsr), rng_(std::move(rng)),
      params_(params) {
    if (params_.kappa < 0.0) throw Error(ErrorCode::InvalidArgument, "kappa must be non-negative");
}

void ServiceLayer::register_service(const ServiceDescriptor& desc) {
    if (desc.min_replicas == 0) throw Error(ErrorCode::InvalidArgument, "min_replicas must be >= 1");
    catalog_.insert_or_assign(desc.service_id, desc);
    instances_[desc.service_id];
}

const ServiceDescriptor& ServiceLayer::descriptor(const std::string& service_id) const {
    auto it = catalog_.find(service_id);
    if (it == catalog_.end()) throw Error(ErrorCode::InvalidArgument, "unknown service " + service_id);
    return it->second;
}

std::vector<std::string> ServiceLayer::services() const {
    std::vector<std::string> out;
    for (const auto& [id, d] : catalog_) out.push_back(id);
    return out;
}

std::vector<const ServiceInstance*> ServiceLayer::instances(const std::string& service_id) const {
    std::vector<const ServiceInstance*> out;
    auto it = instances_.find(service_id);
    if (it == instances_.end()) return out;
    for (const auto& inst : it->second) out.push_back(&inst);
    return out;
}

std::size_t ServiceLayer::instance_count(const std::string& service_id) const {
    auto it = instances_.find(service_id);
    return it == instances_.end() ? 0 : it->second.size();
}

std::size_t ServiceLayer::available_instances(const std::string& service_id, SimTime now) const {
    std::size_t n = 0;
    auto it = instances_.find(service_id);
    if (it == instances_.end()) return 0;
    for (const auto& inst : it->second) {
        if (inst.warm_at <= now && overlay_.is_online(inst.host)) ++n;
    }
    return n;
}

std::int64_t ServiceLayer::storage_used(const NodeId& host) const {
    std::int64_t used = 0;
    for (const auto& [id, list] : instances_) {
        for (const auto& inst : list) {
            if (inst.host == host) used += catalog_.at(id).code_size;
        }
    }
    return used;
}

std::size_t ServiceLayer::eligible_hosts(const ServiceDescriptor& desc, SimTime now) const {
    ResourceQuery q;
    q.required.storage = desc.code_size;
    std::size_t n = 0;
    for (const auto* r : repo_.eligible(q, now)) n += overlay_.is_online(r->id) ? 1 : 0;
    // Hosts already running the service count as eligible too.
    for (const auto& inst : instances_.at(desc.service_id)) {
        const auto& rec = repo_.is_registered(inst.host) ? &repo_.record(inst.host) : nullptr;
        if (rec == nullptr || !rec->free_capacity.covers(q.required)) n += overlay_.is_online(inst.host) ? 1 : 0;
    }
    return n;
}

void ServiceLayer::check_safety(const std::string& service_id, SimTime now) {
    const auto& desc = catalog_.at(service_id);
    const auto floor = std::min<std::int64_t>(static_cast<std::int64_t>(desc.min_replicas),
                                              static_cast<std::int64_t>(eligible_hosts(desc, now)));
    const auto margin = static_cast<std::int64_t>(instance_count(service_id)) - floor;
    min_safety_margin_ = std::min(min_safety_margin_, margin);
}

std::vector<NodeId> ServiceLayer::deploy(const std::string& service_id, std::size_t count, const std::string& region,
                                         bool strict, SimTime now, const std::string& action) {
    std::vector<NodeId> placed;
    if (count == 0) return placed;
    const auto& desc = catalog_.at(service_id);
    auto& list = instances_[service_id];

    ResourceQuery q;
    q.required.storage = desc.code_size;
    if (!region.empty()) q.preferred_region = region;
    q.region_strict = strict && !region.empty();
    q.count = count;
    q.weights = params_.placement;
    for (const auto& inst : list) q.exclude.insert(inst.host);
    for (const auto& id : overlay_.nodes()) {
        if (!overlay_.is_online(id)) q.exclude.insert(id);
    }
    auto hosts = repo_.query(q, now, rng_).nodes;

    std::optional<NodeId> origin;
    if (!hosts.empty()) origin = dsr_.code_holder(service_id, hosts.front(), now);
    if (origin) {
        const auto dist = distribute_content(overlay_, *origin, hosts, desc.code_size, params_.repeaters, now);
        origin_egress_ += dist.origin_egress;
        for (const auto& h : hosts) {
            auto at = dist.arrival.find(h);
            if (at == dist.arrival.end()) continue;
            ServiceInstance inst;
            inst.service_id = service_id;
            inst.host = h;
            inst.region = overlay_.record(h).region;
            inst.warm = true;
            inst.warm_at = at->second;
            inst.deployed_at = now;
            inst.deploy_seq = ++deploy_seq_;
            inst.host_incarnation = overlay_.incarnation(h);
            list.push_back(inst);
            placed.push_back(h);
            placement_log_.push_back(PlacementRecord{now, service_id, action, h, inst.region});
        }
    }
    if (placed.size() < count) {
        shortfalls_ += count - placed.size();
        for (std::size_t k = placed.size(); k < count; ++k) {
            placement_log_.push_back(PlacementRecord{now, service_id, "shortfall", std::nullopt, region});
        }
    }
    return placed;
}

void ServiceLayer::retire(const std::string& service_id, std::size_t count, const std::string& region, SimTime now) {
    auto& list = instances_[service_id];
    for (std::size_t k = 0; k < count; ++k) {
        auto victim = list.end();
        for (auto it = list.begin(); it != list.end(); ++it) {
            if (it->region != region) continue;
            if (victim == list.end() || it->deploy_seq > victim->deploy_seq) victim = it;
        }
        if (victim == list.end()) return;
        placement_log_.push_back(PlacementRecord{now, service_id, "retire", victim->host, victim->region});
        list.erase(victim);
    }
}

void ServiceLayer::deploy_initial(SimTime now) {
    if (!params_.push_enabled) return;
    for (const auto& [id, desc] : catalog_) {
        const auto have = instance_count(id);
        if (have < desc.min_replicas) deploy(id, desc.min_replicas - have, "", false, now, "deploy");
        check_safety(id, now);
    }
}

void ServiceLayer::placement_tick(SimTime now) {
    if (!params_.push_enabled) {
        traffic_.clear();
        return;
    }
    const auto regions = overlay_.regions();
    for (const auto& [service_id, desc] : catalog_) {
        auto& window = traffic_[service_id];
        std::uint64_t total = 0;
        for (const auto& [r, n] : window) total += n;

        std::map<std::string, std::size_t> current, target;
        for (const auto& inst : instances_[service_id]) ++current[inst.region];
        std::size_t sum = 0;
        for (const auto& r : regions) {
            std::size_t t = 0;
            if (total > 0 && window[r] > 0) {
                const double share = static_cast<double>(window[r]) / static_cast<double>(total);
                t = static_cast<std::size_t>(std::ceil(params_.kappa * share - 1e-9));
            }
            target[r] = t;
            sum += t;
        }
        // Top up to min_replicas, preferring regions whose existing instances
        // would otherwise be surplus, then busier regions, then by name.
        while (sum < desc.min_replicas) {
            const std::string* best = nullptr;
            std::int64_t best_surplus = 0;
            std::uint64_t best_traffic = 0;
            for (const auto& r : regions) {
                if (overlay_.online_in_region(r).empty()) continue;
                const auto surplus = static_cast<std::int64_t>(current[r]) - static_cast<std::int64_t>(target[r]);
                const auto traffic = window[r];
                if (best == nullptr || surplus > best_surplus || (surplus == best_surplus && traffic > best_traffic)) {
                    best = &r;
                    best_surplus = surplus;
                    best_traffic = traffic;
                }
            }
            if (best == nullptr) break;
            ++target[*best];
            ++sum;
        }
        for (const auto& r : regions) {
            auto& streak = surplus_streak_[service_id][r];
            if (current[r] < target[r]) {
                streak = 0;
                deploy(service_id, target[r] - current[r], r, true, now, "deploy");
            } else if (current[r] > target[r]) {
                if (++streak >= params_.cooldown_windows) {
                    retire(service_id, current[r] - target[r], r, now);
                    streak = 0;
                }
            } else {
                streak = 0;
            }
        }
        for (auto& inst : instances_[service_id]) inst.regional_traffic_window.clear();
        window.clear();
        check_safety(service_id, now);
    }
}

void ServiceLayer::on_node_leave(const NodeId& id, SimTime now) {
    lanes_.erase(id);
    for (auto& [service_id, list] : instances_) {
        std::string lost_region;
        const auto before = list.size();
        for (const auto& inst : list) {
            if (inst.host != id) continue;
            lost_region = inst.region;
            placement_log_.push_back(PlacementRecord{now, service_id, "lost", inst.host, inst.region});
        }
        std::erase_if(list, [&](const ServiceInstance& inst) { return inst.host == id; });
        if (list.size() == before || !params_.push_enabled) continue;
        const auto& desc = catalog_.at(service_id);
        if (list.size() < desc.min_replicas) deploy(service_id, desc.min_replicas - list.size(), lost_region, false, now, "repair");
        check_safety(service_id, now);
    }
}

SimTime ServiceLayer::reserve_lane(const NodeId& host, SimTime ready, std::uint64_t duration) {
    auto& lanes = lanes_[host];
    if (lanes.empty()) lanes.assign(overlay_.record(host).lanes, SimTime{});
    auto lane = std::min_element(lanes.begin(), lanes.end());
    const SimTime start = std::max(ready, *lane);
    *lane = start + duration;
    return *lane;
}

std::optional<InvocationResult> ServiceLayer::invoke(const Request& req, Callback done) {
    const SimTime now = sim_.now();
    const auto& desc = descriptor(req.service_id);
    const bool requester_online = overlay_.is_online(req.requester);
    const std::string region = overlay_.contains(req.requester) ? overlay_.record(req.requester).region : "";
    ++traffic_[req.service_id][region];

    InvocationResult early;
    early.request_id = req.id;
    early.issued_at = req.issued_at;
    early.finished_at = now;
    early.declared = desc.declared_cost;
    if (!requester_online) {
        early.outcome = Outcome::Unreachable;
        return early;
    }

    Quote quote;
    if (params_.currency) {
        quote = quote_request(ledger_, desc);
        if (ledger_.spendable(req.requester) < quote.requester_part ||
            (quote.subsidy_part > 0 && ledger_.spendable(desc.developer) < quote.subsidy_part)) {
            early.outcome = Outcome::InsufficientFunds;
            return early;
        }
    }

    // Nearest instance by time-to-ready; warming instances are usable once warm.
    ServiceInstance* chosen = nullptr;
    SimTime ready = SimTime::max();
    for (auto& inst : instances_[req.service_id]) {
        if (!overlay_.is_online(inst.host) || overlay_.incarnation(inst.host) != inst.host_incarnation) continue;
        auto at = overlay_.try_route(req.requester, inst.host, params_.request_size, now);
        if (!at) continue;
        const SimTime r = std::max(*at, inst.warm_at);
        if (r < ready || (r == ready && inst.host < chosen->host)) {
            chosen = &inst;
            ready = r;
        }
    }
    bool pulled = false;
    if (chosen == nullptr) {
        if (!dsr_.resolvable(req.service_id)) {
            early.outcome = Outcome::Unreachable;
            return early;
        }
        auto placed = deploy(req.service_id, 1, region, false, now, "pull");
        if (placed.empty()) {
            early.outcome = Outcome::Unreachable;
            return early;
        }
        chosen = &instances_[req.service_id].back();
        auto at = overlay_.try_route(req.requester, chosen->host, params_.request_size, now);
        if (!at) {
            early.outcome = Outcome::Unreachable;
            return early;
        }
        ready = std::max(*at, chosen->warm_at);
        pulled = true;
    }
    const NodeId host = chosen->host;
    ++chosen->served_count;
    ++chosen->regional_traffic_window[region];

    if (req.read_key && store_.has_key(*req.read_key)) {
        const auto r = store_.read(*req.read_key, host, ready);
        if (r.status == ReadResult::Status::Ok) {
            ready = std::max(ready, r.delivered);
        } else if (r.status != ReadResult::Status::Missing) {
            early.outcome = Outcome::Unreachable;
            early.host = host;
            return early;
        }
    }

    auto p = std::make_shared<Pending>();
    p->req = req;
    p->desc = desc;
    p->metering = meter(desc.declared_cost, req.actual_cost);
    p->host = host;
    p->host_incarnation = overlay_.incarnation(host);
    p->pulled = pulled;
    p->done = std::move(done);
    if (params_.currency) {
        p->reserved = quote;
        p->due = prorate(quote, p->metering);
        ledger_.reserve(req.requester, quote.requester_part);
        ledger_.reserve(desc.developer, quote.subsidy_part);
    }

    const auto& cap = overlay_.record(host);
    const std::int64_t per_lane = std::max<std::int64_t>(1, cap.capacity.compute / static_cast<std::int64_t>(cap.lanes));
    const auto work = p->metering.consumed.compute;
    const auto duration = static_cast<std::uint64_t>((work + per_lane - 1) / per_lane);
    const SimTime end = reserve_lane(host, ready, duration);
    sim_.schedule(end, EventKind::RequestCompletion, [this, p] { complete(p); });
    return std::nullopt;
}

void ServiceLayer::complete(const std::shared_ptr<Pending>& p) {
    const SimTime now = sim_.now();
    InvocationResult res;
    res.request_id = p->req.id;
    res.issued_at = p->req.issued_at;
    res.host = p->host;
    res.declared = p->desc.declared_cost;
    res.pulled = p->pulled;
    res.finished_at = now;

    if (params_.currency) {
        ledger_.release(p->req.requester, p->reserved.requester_part);
        ledger_.release(p->desc.developer, p->reserved.subsidy_part);
    }
    const bool host_alive = overlay_.is_online(p->host) && overlay_.incarnation(p->host) == p->host_incarnation;
    std::optional<SimTime> delivered;
    if (host_alive) delivered = overlay_.try_route(p->host, p->req.requester, p->metering.consumed.bandwidth, now);
    if (!host_alive || !delivered) {
        res.outcome = host_alive ? Outcome::Unreachable : Outcome::HostLost;
        if (repo_.is_registered(p->host)) repo_.record_task(p->host, false);
        p->done(res);
        return;
    }
    res.finished_at = *delivered;
    res.consumed = p->metering.consumed;
    res.outcome = p->metering.terminated ? Outcome::Terminated : Outcome::Completed;
    if (repo_.is_registered(p->host)) repo_.record_task(p->host, res.outcome == Outcome::Completed);

    if (!params_.currency) {
        res.settled = true;
        p->done(res);
        return;
    }
    std::vector<Transfer> ops;
    std::int64_t credit = 0;
    if (ledger_.params().minting) {
        if (p->due.requester_part > 0) {
            ops.push_back({p->req.requester, NodeId::issuer(), p->due.requester_part, TransferReason::ServicePayment, now});
        }
        if (p->due.subsidy_part > 0) {
            ops.push_back({p->desc.developer, NodeId::issuer(), p->due.subsidy_part, TransferReason::Subsidy, now});
        }
        credit = ledger_.quote(res.consumed);
        if (credit > 0) ops.push_back({NodeId::issuer(), p->host, credit, TransferReason::HostingReward, now});
    } else {
        if (p->due.requester_part > 0) {
            ops.push_back({p->req.requester, p->host, p->due.requester_part, TransferReason::ServicePayment, now});
        }
        if (p->due.subsidy_part > 0) {
            ops.push_back({p->desc.developer, p->host, p->due.subsidy_part, TransferReason::Subsidy, now});
        }
        credit = p->due.requester_part + p->due.subsidy_part;
    }
    bool committed = ops.empty();
    if (!ops.empty()) {
        const auto* vsp = overlay_.dvsp(overlay_.record(p->req.requester).region);
        if (vsp != nullptr && overlay_.has_quorum(*vsp)) {
            committed = overlay_.execute_transaction(*vsp, ops, ledger_).committed();
        }
    }
    if (committed) {
        res.settled = true;
        res.requester_debit = p->due.requester_part;
        res.subsidy_part = p->due.subsidy_part;
        res.host_credit = credit;
    }
    p->done(res);
}

void ServiceLayer::write_placement_csv(std::ostream& out) const {
    out << "at,service_id,action,host,region\n";
    for (const auto& r : placement_log_) {
        out << r.at.ticks << ',' << r.service_id << ',' << r.action << ',' << (r.host ? r.host->hex() : "") << ','
            << r.region << '\n';
    }
}

}  // namespace c3
