#include "c3/replication.hpp"

#include <algorithm>
#include <tuple>

#include "c3/error.hpp"

namespace c3 {

CausalOrder compare(const VersionVector& a, const VersionVector& b) {
    bool a_ahead = false, b_ahead = false;
    auto ia = a.begin(), ib = b.begin();
    while (ia != a.end() || ib != b.end()) {
        if (ib == b.end() || (ia != a.end() && ia->first < ib->first)) {
            if (ia->second > 0) a_ahead = true;
            ++ia;
        } else if (ia == a.end() || ib->first < ia->first) {
            if (ib->second > 0) b_ahead = true;
            ++ib;
        } else {
            if (ia->second > ib->second) a_ahead = true;
            if (ib->second > ia->second) b_ahead = true;
            ++ia;
            ++ib;
        }
    }
    if (a_ahead && b_ahead) return CausalOrder::Concurrent;
    if (a_ahead) return CausalOrder::After;
    if (b_ahead) return CausalOrder::Before;
    return CausalOrder::Equal;
}

bool includes(const VersionVector& big, const VersionVector& small) {
    const auto order = compare(big, small);
    return order == CausalOrder::Equal || order == CausalOrder::After;
}

VersionVector pointwise_max(const VersionVector& a, const VersionVector& b) {
    VersionVector out = a;
    for (const auto& [id, c] : b) {
        auto& slot = out[id];
        slot = std::max(slot, c);
    }
    return out;
}

ObjectState merge(const ObjectState& a, const ObjectState& b) {
    if (!a.present) return b;
    if (!b.present) return a;
    auto rank = [](const ObjectState& s) { return std::tie(s.wall, s.payload, s.encrypted, s.owner); };
    ObjectState out = rank(a) >= rank(b) ? a : b;
    out.vv = pointwise_max(a.vv, b.vv);
    return out;
}

ReplicatedStore::ReplicatedStore(Overlay& overlay, ResourceRepository& repo, RngStream rng, ReplicationParams params)
    : overlay_(overlay), repo_(repo), rng_(std::move(rng)), params_(params) {
    if (params_.replicas == 0) throw Error(ErrorCode::InvalidArgument, "replication factor must be >= 1");
}

const ReplicaSet& ReplicatedStore::replica_set(const std::string& key) const {
    auto it = sets_.find(key);
    if (it == sets_.end()) throw Error(ErrorCode::InvalidArgument, "unknown key " + key);
    return it->second;
}

std::vector<std::string> ReplicatedStore::keys() const {
    std::vector<std::string> out;
    for (const auto& [k, s] : sets_) out.push_back(k);
    return out;
}

ObjectState& ReplicatedStore::copy_at(const std::string& key, const NodeId& host) {
    held_[host].insert(key);
    return copies_[key][host];
}

const ObjectState* ReplicatedStore::state_at(const std::string& key, const NodeId& host) const {
    auto it = copies_.find(key);
    if (it == copies_.end()) return nullptr;
    auto jt = it->second.find(host);
    return jt == it->second.end() ? nullptr : &jt->second;
}

std::vector<NodeId> ReplicatedStore::online_hosts(const ReplicaSet& set) const {
    std::vector<NodeId> out;
    for (const auto& h : set.hosts) {
        if (overlay_.is_online(h)) out.push_back(h);
    }
    return out;
}

std::vector<NodeId> ReplicatedStore::pick_hosts(const ReplicaSet& set, std::size_t count, SimTime now) {
    ResourceQuery q;
    q.required.storage = set.size;
    q.preferred_region = set.region;
    q.weights = params_.placement;
    q.count = count;
    q.exclude.insert(set.hosts.begin(), set.hosts.end());
    // The repository can still list a node inside its staleness horizon after
    // it went offline.
    for (const auto& id : overlay_.nodes()) {
        if (!overlay_.is_online(id)) q.exclude.insert(id);
    }
    if (set.region) return repo_.query(q, now, rng_).nodes;

    // Without a home region, spread copies: each pick goes to the region
    // holding the fewest copies so far (ties by name).
    std::map<std::string, std::size_t> held;
    for (const auto& r : overlay_.regions()) held[r] = 0;
    for (const auto& h : set.hosts) ++held[overlay_.record(h).region];
    std::vector<NodeId> out;
    while (out.size() < count && !held.empty()) {
        auto best = held.begin();
        for (auto it = held.begin(); it != held.end(); ++it) {
            if (it->second < best->second) best = it;
        }
        q.preferred_region = best->first;
        q.region_strict = true;
        q.count = 1;
        auto got = repo_.query(q, now, rng_).nodes;
        if (got.empty()) {
            held.erase(best);
            continue;
        }
        ++best->second;
        q.exclude.insert(got.front());
        out.push_back(got.front());
    }
    return out;
}

const ReplicaSet& ReplicatedStore::create(const std::string& key, SimTime now, std::int64_t size,
                                          std::optional<std::string> region, std::optional<std::size_t> r) {
    if (auto it = sets_.find(key); it != sets_.end()) return it->second;
    ReplicaSet set{key, {}, r.value_or(params_.replicas), size, std::move(region)};
    set.hosts = pick_hosts(set, std::min(set.target, std::max<std::size_t>(overlay_.online_count(), 1)), now);
    if (set.hosts.empty()) throw Error(ErrorCode::Unreachable, "no replica host for " + key);
    for (const auto& h : set.hosts) copy_at(key, h);
    return sets_.emplace(key, std::move(set)).first->second;
}

const ReplicaSet& ReplicatedStore::create_on(const std::string& key, std::vector<NodeId> hosts, std::int64_t size) {
    if (hosts.empty()) throw Error(ErrorCode::InvalidArgument, "replica set needs a host");
    ReplicaSet set{key, std::move(hosts), 0, size, std::nullopt};
    set.target = set.hosts.size();
    for (const auto& h : set.hosts) copy_at(key, h);
    return sets_.insert_or_assign(key, std::move(set)).first->second;
}

std::optional<NodeId> ReplicatedStore::nearest_replica(const std::string& key, const NodeId& from, SimTime now) {
    const auto& set = replica_set(key);
    std::optional<NodeId> best;
    SimTime best_at = SimTime::max();
    for (const auto& h : set.hosts) {
        auto t = overlay_.try_route(from, h, 0, now);
        if (!t) continue;
        if (*t < best_at || (*t == best_at && h < *best)) {
            best = h;
            best_at = *t;
        }
    }
    return best;
}

VersionVector ReplicatedStore::put(const std::string& key, std::string payload, const NodeId& writer, SimTime now,
                                   bool encrypted) {
    if (!overlay_.is_online(writer)) throw Error(ErrorCode::Unreachable, "writer offline");
    auto replica = nearest_replica(key, writer, now);
    if (!replica) throw Error(ErrorCode::Unreachable, "no reachable replica of " + key);
    return put_at(key, *replica, std::move(payload), writer, now, encrypted);
}

VersionVector ReplicatedStore::put_at(const std::string& key, const NodeId& replica, std::string payload,
                                      const NodeId& writer, SimTime now, bool encrypted) {
    const auto& set = replica_set(key);
    if (std::find(set.hosts.begin(), set.hosts.end(), replica) == set.hosts.end() || !overlay_.is_online(replica)) {
        throw Error(ErrorCode::Unreachable, "replica not serving " + key);
    }
    auto& state = copy_at(key, replica);
    std::uint64_t t = now.ticks;
    if (state.present && state.wall.time >= t) t = state.wall.time + 1;
    state.present = true;
    ++state.vv[writer];
    state.wall = Stamp{t, writer};
    state.payload = std::move(payload);
    state.encrypted = encrypted;
    state.owner = writer;

    writes_.push_back(WriteRecord{key, state.vv, writer, now, std::nullopt, std::nullopt});
    last_activity_[key] = now;
    pending_[key].push_back(writes_.size() - 1);
    dirty_.insert(key);
    check_agreement(key, now);
    return state.vv;
}

ReadResult ReplicatedStore::read(const std::string& key, const NodeId& reader, SimTime now) {
    ReadResult out;
    auto replica = nearest_replica(key, reader, now);
    if (!replica) {
        out.status = ReadResult::Status::Unreachable;
        return out;
    }
    const auto* s = state_at(key, *replica);
    out.replica = *replica;
    if (s == nullptr || !s->present) {
        out.status = ReadResult::Status::Missing;
        return out;
    }
    if (s->encrypted && s->owner != reader) {
        ++privacy_rejections_;
        out.status = ReadResult::Status::Rejected;
        return out;
    }
    const auto there = overlay_.try_route(reader, *replica, 0, now);
    const auto back = overlay_.try_route(*replica, reader, static_cast<std::int64_t>(s->payload.size()), *there);
    out.status = ReadResult::Status::Ok;
    out.payload = s->payload;
    out.delivered = back.value_or(*there);
    return out;
}

ReadResult ReplicatedStore::host_read(const std::string& key, const NodeId& host) {
    ReadResult out;
    out.replica = host;
    const auto* s = state_at(key, host);
    if (s == nullptr || !s->present || !overlay_.is_online(host)) {
        out.status = ReadResult::Status::Missing;
        return out;
    }
    if (s->encrypted && s->owner != host) {
        ++privacy_rejections_;
        out.status = ReadResult::Status::Rejected;
        return out;
    }
    out.status = ReadResult::Status::Ok;
    out.payload = s->payload;
    return out;
}

void ReplicatedStore::exchange(const std::string& key, const NodeId& a, const NodeId& b, SimTime now) {
    auto merged = merge(copy_at(key, a), copy_at(key, b));
    copy_at(key, a) = merged;
    copy_at(key, b) = std::move(merged);
    check_agreement(key, now);
}

void ReplicatedStore::gossip_round(const std::string& key, SimTime now) {
    const auto online = online_hosts(replica_set(key));
    if (online.size() < 2) return;
    for (std::size_t i = 0; i < online.size(); ++i) {
        auto j = static_cast<std::size_t>(rng_.uniform_below(online.size() - 1));
        if (j >= i) ++j;
        exchange(key, online[i], online[j], now);
    }
}

bool ReplicatedStore::converged(const std::string& key) const {
    const auto online = online_hosts(replica_set(key));
    if (online.empty()) return false;
    const auto* first = state_at(key, online.front());
    for (const auto& h : online) {
        const auto* s = state_at(key, h);
        if (s == nullptr || first == nullptr || !(*s == *first)) return false;
    }
    return true;
}

void ReplicatedStore::gossip_dirty(SimTime now) {
    const std::vector<std::string> keys(dirty_.begin(), dirty_.end());
    for (const auto& key : keys) {
        gossip_round(key, now);
        if (converged(key)) dirty_.erase(key);
    }
}

void ReplicatedStore::check_agreement(const std::string& key, SimTime now) {
    auto pit = pending_.find(key);
    if (pit == pending_.end() || pit->second.empty()) return;
    if (!converged(key)) return;
    const auto online = online_hosts(replica_set(key));
    const auto* s = state_at(key, online.front());
    auto& pend = pit->second;
    std::erase_if(pend, [&](std::size_t w) {
        if (!includes(s->vv, writes_[w].vv)) return false;
        writes_[w].agreed_at = now;
        writes_[w].quiesced_at = std::max(writes_[w].at, last_activity_[key]);
        return true;
    });
}

void ReplicatedStore::rereplicate(SimTime now) {
    for (auto& [key, set] : sets_) {
        const auto before = set.hosts.size();
        std::erase_if(set.hosts, [this](const NodeId& h) { return !overlay_.is_online(h); });
        const std::size_t target = std::min(set.target, overlay_.online_count());
        if (set.hosts.size() < target) {
            ObjectState seed;
            for (const auto& [holder, s] : copies_[key]) {
                if (overlay_.is_online(holder)) seed = merge(seed, s);
            }
            for (const auto& h : pick_hosts(set, target - set.hosts.size(), now)) {
                auto& c = copy_at(key, h);
                c = merge(c, seed);
                set.hosts.push_back(h);
            }
        }
        if (set.hosts.size() != before) {
            dirty_.insert(key);
            check_agreement(key, now);
        }
    }
}

void ReplicatedStore::on_join(const NodeId& id, SimTime now) {
    auto hit = held_.find(id);
    if (hit == held_.end()) return;
    const std::vector<std::string> keys(hit->second.begin(), hit->second.end());
    for (const auto& key : keys) {
        auto& set = sets_.at(key);
        dirty_.insert(key);
        last_activity_[key] = now;
        if (std::find(set.hosts.begin(), set.hosts.end(), id) != set.hosts.end()) continue;
        const ObjectState orphan = copies_[key][id];
        for (const auto& h : online_hosts(set)) {
            auto& c = copy_at(key, h);
            c = merge(c, orphan);
        }
        if (!online_hosts(set).empty()) {
            copies_[key].erase(id);
            held_[id].erase(key);
        }
        check_agreement(key, now);
    }
}

std::int64_t ReplicatedStore::storage_used(const NodeId& id) const {
    auto it = held_.find(id);
    if (it == held_.end()) return 0;
    std::int64_t used = 0;
    for (const auto& key : it->second) used += sets_.at(key).size;
    return used;
}

std::size_t ReplicatedStore::lost_writes() const {
    std::size_t lost = 0;
    for (const auto& w : writes_) {
        bool found = false;
        auto it = copies_.find(w.key);
        if (it != copies_.end()) {
            for (const auto& [holder, s] : it->second) {
                if (s.present && includes(s.vv, w.vv)) {
                    found = true;
                    break;
                }
            }
        }
        lost += found ? 0 : 1;
    }
    return lost;
}

}  // namespace c3
