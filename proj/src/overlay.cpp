#include "c3/overlay.hpp"

#include <algorithm>
#include <limits>
#include <queue>

#include "c3/error.hpp"

namespace c3 {

namespace {

constexpr std::uint64_t kUnreached = std::numeric_limits<std::uint64_t>::max();

}  // namespace

Overlay::Overlay(OverlayParams params, RngStream rng) : params_(params), rng_(std::move(rng)) {
    if (params_.dvsp_size == 0) throw Error(ErrorCode::InvalidArgument, "dvsp_size must be positive");
    if (params_.intra_latency_max < params_.intra_latency_min || params_.inter_latency_max < params_.inter_latency_min) {
        throw Error(ErrorCode::InvalidArgument, "latency ranges must be ordered");
    }
}

std::uint32_t Overlay::index_of(const NodeId& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw Error(ErrorCode::UnknownNode, id.short_hex());
    return it->second;
}

void Overlay::add_node(NodeRecord record) {
    if (index_.count(record.id) > 0) throw Error(ErrorCode::InvalidArgument, "node registered twice");
    for (auto k : kAllResources) {
        if (record.capacity[k] < 0) throw Error(ErrorCode::InvalidArgument, "capacities must be non-negative");
    }
    record.trust_links.erase(record.id);
    record.online = false;
    if (record.lanes == 0) record.lanes = 1;
    index_.emplace(record.id, static_cast<std::uint32_t>(nodes_.size()));
    nodes_.push_back(NodeState{std::move(record), {}, {}, {}, 0});
    ++topology_version_;
}

bool Overlay::adjacent(std::uint32_t a, std::uint32_t b) const {
    const auto& adj = nodes_[a].adjacency;
    return std::any_of(adj.begin(), adj.end(), [b](const Edge& e) { return e.to == b; });
}

void Overlay::add_edge(std::uint32_t a, std::uint32_t b, std::uint64_t latency) {
    if (a == b || adjacent(a, b)) return;
    nodes_[a].adjacency.push_back(Edge{b, latency});
    nodes_[b].adjacency.push_back(Edge{a, latency});
    ++topology_version_;
}

std::uint64_t Overlay::draw_latency(std::uint32_t a, std::uint32_t b) {
    const bool same = nodes_[a].record.region == nodes_[b].record.region;
    const auto lo = same ? params_.intra_latency_min : params_.inter_latency_min;
    const auto hi = same ? params_.intra_latency_max : params_.inter_latency_max;
    return static_cast<std::uint64_t>(rng_.uniform_int(static_cast<std::int64_t>(lo), static_cast<std::int64_t>(hi)));
}

void Overlay::connect(const NodeId& a, const NodeId& b, std::uint64_t latency) {
    add_edge(index_of(a), index_of(b), latency);
}

void Overlay::random_regular(const std::vector<std::uint32_t>& members) {
    const std::size_t n = members.size();
    if (n < 2) return;
    const std::size_t d = std::min(params_.degree, n - 1);
    std::vector<std::uint32_t> points;
    for (auto m : members) points.insert(points.end(), d, m);
    if (points.size() % 2 == 1) points.pop_back();

    // Greedy random pairing that only joins suitable point pairs; restart
    // when stuck. Keeps the best partial pairing as a fallback.
    std::vector<std::pair<std::uint32_t, std::uint32_t>> best;
    for (int attempt = 0; attempt < 64; ++attempt) {
        auto pts = points;
        std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
        std::set<std::pair<std::uint32_t, std::uint32_t>> seen;
        bool stuck = false;
        while (pts.size() >= 2 && !stuck) {
            stuck = true;
            const std::size_t tries = pts.size() * 8;
            for (std::size_t t = 0; t < tries; ++t) {
                auto i = static_cast<std::size_t>(rng_.uniform_below(pts.size()));
                auto j = static_cast<std::size_t>(rng_.uniform_below(pts.size()));
                if (i == j) continue;
                auto a = pts[i], b = pts[j];
                if (a == b) continue;
                auto key = std::minmax(a, b);
                if (seen.count(key) > 0) continue;
                seen.insert(key);
                pairs.emplace_back(key.first, key.second);
                if (i < j) std::swap(i, j);
                pts[i] = pts.back();
                pts.pop_back();
                pts[j] = pts.back();
                pts.pop_back();
                stuck = false;
                break;
            }
        }
        if (pairs.size() > best.size()) best = pairs;
        if (!stuck) break;
    }
    for (auto [a, b] : best) add_edge(a, b, draw_latency(a, b));
}

void Overlay::build_topology() {
    std::map<std::string, std::vector<std::uint32_t>> by_region;
    for (std::uint32_t i = 0; i < nodes_.size(); ++i) by_region[nodes_[i].record.region].push_back(i);
    for (auto& [region, members] : by_region) {
        std::sort(members.begin(), members.end(),
                  [this](auto a, auto b) { return nodes_[a].record.id < nodes_[b].record.id; });
        random_regular(members);
    }
    std::vector<const std::vector<std::uint32_t>*> groups;
    for (auto& [region, members] : by_region) groups.push_back(&members);
    for (std::size_t r1 = 0; r1 < groups.size(); ++r1) {
        for (std::size_t r2 = r1 + 1; r2 < groups.size(); ++r2) {
            for (std::size_t k = 0; k < params_.inter_region_links; ++k) {
                auto a = (*groups[r1])[rng_.uniform_below(groups[r1]->size())];
                auto b = (*groups[r2])[rng_.uniform_below(groups[r2]->size())];
                add_edge(a, b, draw_latency(a, b));
            }
        }
    }
}

bool Overlay::is_online(const NodeId& id) const {
    auto it = index_.find(id);
    return it != index_.end() && nodes_[it->second].record.online;
}

const NodeRecord& Overlay::record(const NodeId& id) const { return nodes_[index_of(id)].record; }
std::uint64_t Overlay::incarnation(const NodeId& id) const { return nodes_[index_of(id)].incarnation; }
SimTime Overlay::online_since(const NodeId& id) const { return nodes_[index_of(id)].online_since; }

std::vector<NodeId> Overlay::nodes() const {
    std::vector<NodeId> out;
    out.reserve(nodes_.size());
    for (const auto& n : nodes_) out.push_back(n.record.id);
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<NodeId> Overlay::online_nodes() const {
    std::vector<NodeId> out;
    for (const auto& n : nodes_) {
        if (n.record.online) out.push_back(n.record.id);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<NodeId> Overlay::online_in_region(const std::string& region) const {
    std::vector<NodeId> out;
    for (const auto& n : nodes_) {
        if (n.record.online && n.record.region == region) out.push_back(n.record.id);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::string> Overlay::regions() const {
    std::set<std::string> s;
    for (const auto& n : nodes_) s.insert(n.record.region);
    return {s.begin(), s.end()};
}

std::size_t Overlay::online_degree(std::uint32_t i) const {
    std::size_t d = 0;
    for (const auto& e : nodes_[i].adjacency) d += nodes_[e.to].record.online ? 1 : 0;
    return d;
}

std::vector<NodeId> Overlay::neighbours(const NodeId& id) const {
    std::vector<NodeId> out;
    for (const auto& e : nodes_[index_of(id)].adjacency) {
        if (nodes_[e.to].record.online) out.push_back(nodes_[e.to].record.id);
    }
    std::sort(out.begin(), out.end());
    return out;
}

PositionFingerprint Overlay::fingerprint(const NodeId& id) const { return nodes_[index_of(id)].fingerprint; }

void Overlay::refresh_fingerprint(std::uint32_t i) {
    nodes_[i].fingerprint = fingerprint_of(neighbours(nodes_[i].record.id));
}

void Overlay::repair_degree(std::uint32_t i, std::set<std::uint32_t>& touched) {
    while (online_degree(i) < params_.min_degree) {
        std::vector<std::uint32_t> local, remote;
        for (std::uint32_t c = 0; c < nodes_.size(); ++c) {
            if (c == i || !nodes_[c].record.online || adjacent(i, c)) continue;
            (nodes_[c].record.region == nodes_[i].record.region ? local : remote).push_back(c);
        }
        auto& pool = local.empty() ? remote : local;
        if (pool.empty()) return;
        const auto c = pool[rng_.uniform_below(pool.size())];
        add_edge(i, c, draw_latency(i, c));
        touched.insert(c);
    }
}

MembershipDelta Overlay::join(const NodeRecord& rec, SimTime now) {
    if (!contains(rec.id)) {
        add_node(rec);
        const auto i = index_of(rec.id);
        std::vector<std::uint32_t> local, any;
        for (std::uint32_t c = 0; c < nodes_.size(); ++c) {
            if (c == i || !nodes_[c].record.online) continue;
            any.push_back(c);
            if (nodes_[c].record.region == rec.region) local.push_back(c);
        }
        auto& pool = local.empty() ? any : local;
        for (std::size_t k = 0; k < params_.degree && !pool.empty(); ++k) {
            const auto pick = rng_.uniform_below(pool.size());
            add_edge(i, pool[pick], draw_latency(i, pool[pick]));
            pool[pick] = pool.back();
            pool.pop_back();
        }
    }
    return join(rec.id, now);
}

MembershipDelta Overlay::join(const NodeId& id, SimTime now) {
    const auto i = index_of(id);
    auto& st = nodes_[i];
    if (st.record.online) throw Error(ErrorCode::DuplicateJoin, id.short_hex());
    st.record.online = true;
    st.online_since = now;
    ++st.incarnation;
    ++online_count_;
    ++topology_version_;

    std::set<std::uint32_t> touched;
    repair_degree(i, touched);
    for (const auto& e : nodes_[i].adjacency) {
        if (nodes_[e.to].record.online) touched.insert(e.to);
    }
    MembershipDelta delta{id, true, {}, {}};
    refresh_fingerprint(i);
    delta.fingerprint_changed.push_back(id);
    for (auto t : touched) {
        refresh_fingerprint(t);
        delta.fingerprint_changed.push_back(nodes_[t].record.id);
    }
    std::sort(delta.fingerprint_changed.begin(), delta.fingerprint_changed.end());
    return delta;
}

MembershipDelta Overlay::leave(const NodeId& id, SimTime now) {
    (void)now;
    auto it = index_.find(id);
    if (it == index_.end() || !nodes_[it->second].record.online) throw Error(ErrorCode::UnknownLeave, id.short_hex());
    const auto i = it->second;
    nodes_[i].record.online = false;
    --online_count_;
    ++topology_version_;

    MembershipDelta delta{id, false, {}, {}};
    std::set<std::uint32_t> touched;
    for (const auto& e : nodes_[i].adjacency) {
        if (nodes_[e.to].record.online) touched.insert(e.to);
    }
    const std::set<std::uint32_t> direct = touched;
    for (auto n : direct) repair_degree(n, touched);
    for (auto t : touched) {
        refresh_fingerprint(t);
        delta.fingerprint_changed.push_back(nodes_[t].record.id);
    }
    std::sort(delta.fingerprint_changed.begin(), delta.fingerprint_changed.end());

    const auto& region = nodes_[i].record.region;
    auto d = dvsps_.find(region);
    if (d != dvsps_.end() &&
        std::find(d->second.members.begin(), d->second.members.end(), id) != d->second.members.end()) {
        flagged_.insert(region);
        delta.dvsp_flagged.push_back(region);
    }
    return delta;
}

const Overlay::PathTree& Overlay::path_tree(std::uint32_t src) {
    auto& tree = path_cache_[src];
    if (tree.version == topology_version_ && !tree.dist.empty()) return tree;
    tree.version = topology_version_;
    tree.dist.assign(nodes_.size(), kUnreached);
    tree.bottleneck.assign(nodes_.size(), 0);
    using Item = std::pair<std::uint64_t, std::uint32_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    tree.dist[src] = 0;
    tree.bottleneck[src] = nodes_[src].record.capacity.bandwidth;
    pq.emplace(0, src);
    while (!pq.empty()) {
        auto [d, u] = pq.top();
        pq.pop();
        if (d != tree.dist[u]) continue;
        for (const auto& e : nodes_[u].adjacency) {
            if (!nodes_[e.to].record.online) continue;
            const auto nd = d + e.latency;
            if (nd < tree.dist[e.to]) {
                tree.dist[e.to] = nd;
                tree.bottleneck[e.to] = std::min(tree.bottleneck[u], nodes_[e.to].record.capacity.bandwidth);
                pq.emplace(nd, e.to);
            }
        }
    }
    return tree;
}

std::optional<SimTime> Overlay::try_route(const NodeId& from, const NodeId& to, std::int64_t size, SimTime now) {
    auto fi = index_.find(from);
    auto ti = index_.find(to);
    if (fi == index_.end() || ti == index_.end()) return std::nullopt;
    if (!nodes_[fi->second].record.online || !nodes_[ti->second].record.online) return std::nullopt;
    if (fi->second == ti->second) return now;
    const auto& tree = path_tree(fi->second);
    const auto dist = tree.dist[ti->second];
    if (dist == kUnreached) return std::nullopt;
    std::uint64_t transfer = 0;
    if (size > 0) {
        const auto bw = tree.bottleneck[ti->second];
        if (bw <= 0) return std::nullopt;
        transfer = static_cast<std::uint64_t>((size + bw - 1) / bw);
    }
    return now + dist + transfer;
}

SimTime Overlay::route(const NodeId& from, const NodeId& to, std::int64_t size, SimTime now) {
    auto t = try_route(from, to, size, now);
    if (!t) throw Error(ErrorCode::Unreachable, from.short_hex() + " -> " + to.short_hex());
    return *t;
}

const VirtualSuperPeer& Overlay::form_dvsp(const std::string& region, SimTime now) {
    auto online = online_in_region(region);
    if (online.empty()) throw Error(ErrorCode::EmptyRegion, region);
    // Longest uptime first; online_in_region is already sorted by id, and the
    // stable sort keeps that order among equal uptimes.
    std::stable_sort(online.begin(), online.end(), [&](const NodeId& a, const NodeId& b) {
        return (now - online_since(a)) > (now - online_since(b));
    });
    if (online.size() > params_.dvsp_size) online.resize(params_.dvsp_size);
    auto& vsp = dvsps_[region];
    vsp.members = std::move(online);
    vsp.region = region;
    vsp.epoch = ++epochs_[region];
    flagged_.erase(region);
    return vsp;
}

const VirtualSuperPeer* Overlay::dvsp(const std::string& region) const {
    auto it = dvsps_.find(region);
    return it == dvsps_.end() ? nullptr : &it->second;
}

bool Overlay::has_quorum(const VirtualSuperPeer& vsp) const {
    if (vsp.members.empty()) return false;
    std::size_t up = 0;
    for (const auto& m : vsp.members) up += is_online(m) ? 1 : 0;
    return up >= vsp.quorum();
}

bool Overlay::needs_reform(const std::string& region) const {
    const auto online = online_in_region(region);
    if (online.empty()) return false;
    auto it = dvsps_.find(region);
    if (it == dvsps_.end() || flagged_.count(region) > 0) return true;
    const auto& members = it->second.members;
    if (members.size() < std::min(params_.dvsp_size, online.size())) return true;
    return std::any_of(members.begin(), members.end(), [this](const NodeId& m) { return !is_online(m); });
}

std::vector<std::string> Overlay::gossip_tick(SimTime now) {
    std::vector<std::string> reformed;
    for (const auto& region : regions()) {
        if (online_in_region(region).empty()) {
            auto it = dvsps_.find(region);
            if (it != dvsps_.end()) it->second.members.clear();
            flagged_.erase(region);
            continue;
        }
        if (needs_reform(region)) {
            form_dvsp(region, now);
            reformed.push_back(region);
        }
    }
    return reformed;
}

TxResult Overlay::execute_transaction(const VirtualSuperPeer& coordinator, std::span<const Transfer> ops,
                                      Ledger& ledger) {
    if (!has_quorum(coordinator)) throw Error(ErrorCode::NoQuorum, "super-peer of " + coordinator.region);
    // Prepare: every participating overlay node must be reachable.
    for (const auto& op : ops) {
        for (const auto* id : {&op.from, &op.to}) {
            if (contains(*id) && !is_online(*id)) return TxResult{TxOutcome::Abort, "participant offline"};
        }
    }
    if (!ledger.apply_atomic(ops)) return TxResult{TxOutcome::Abort, "operation rejected"};
    return TxResult{TxOutcome::Commit, {}};
}

bool Overlay::online_connected(const std::optional<NodeId>& without) const {
    std::optional<std::uint32_t> skip;
    if (without) skip = index_of(*without);
    std::vector<std::uint32_t> live;
    for (std::uint32_t i = 0; i < nodes_.size(); ++i) {
        if (nodes_[i].record.online && skip != i) live.push_back(i);
    }
    if (live.size() <= 1) return true;
    std::vector<char> seen(nodes_.size(), 0);
    std::vector<std::uint32_t> stack{live.front()};
    seen[live.front()] = 1;
    std::size_t reached = 1;
    while (!stack.empty()) {
        auto u = stack.back();
        stack.pop_back();
        for (const auto& e : nodes_[u].adjacency) {
            if (seen[e.to] || !nodes_[e.to].record.online || skip == e.to) continue;
            seen[e.to] = 1;
            ++reached;
            stack.push_back(e.to);
        }
    }
    return reached == live.size();
}

}  // namespace c3
