#include "c3/evolution.hpp"

#include <algorithm>

#include "c3/error.hpp"

namespace c3 {

Evolution::Evolution(double theta) : theta_(theta) {
    if (!(theta > 0.0 && theta <= 1.0)) throw Error(ErrorCode::InvalidArgument, "theta must be in (0,1]");
}

void Evolution::set_trust(const NodeId& node, std::set<NodeId> trusted) {
    trusted.erase(node);
    trust_[node] = std::move(trusted);
}

const std::set<NodeId>& Evolution::trusted_by(const NodeId& node) const {
    static const std::set<NodeId> empty;
    auto it = trust_.find(node);
    return it == trust_.end() ? empty : it->second;
}

void Evolution::add_root(VersionNode v) {
    if (v.parent) throw Error(ErrorCode::UnknownParent, "root versions have no parent");
    if (v.fitness < 0.0) throw Error(ErrorCode::InvalidArgument, "fitness must be non-negative");
    versions_.insert_or_assign(v.version_id, std::move(v));
}

const VersionNode& Evolution::version(const std::string& version_id) const {
    auto it = versions_.find(version_id);
    if (it == versions_.end()) throw Error(ErrorCode::UnknownVersion, version_id);
    return it->second;
}

void Evolution::install(const NodeId& node, const std::string& version_id) {
    const auto& v = version(version_id);
    AdoptionState s{node, v.service_id, version_id, {}};
    states_.insert_or_assign({node, v.service_id}, s);
    initial_.insert_or_assign({node, v.service_id}, s);
}

void Evolution::release(VersionNode v, std::span<const NodeId> origins, SimTime now) {
    if (v.parent && versions_.count(*v.parent) == 0) throw Error(ErrorCode::UnknownParent, *v.parent);
    if (v.parent && version(*v.parent).service_id != v.service_id) {
        throw Error(ErrorCode::UnknownParent, "parent belongs to another service");
    }
    if (v.fitness < 0.0) throw Error(ErrorCode::InvalidArgument, "fitness must be non-negative");
    v.released_at = now;
    const auto id = v.version_id;
    const auto service = v.service_id;
    versions_.insert_or_assign(id, std::move(v));
    for (const auto& o : origins) {
        auto it = states_.find({o, service});
        if (it == states_.end()) {
            AdoptionState s{o, service, id, {}};
            states_.emplace(std::make_pair(o, service), s);
            initial_.emplace(std::make_pair(o, service), AdoptionState{o, service, "", {}});
            log_.push_back(AdoptionRecord{now, o, service, "", id, false, 0});
        } else if (it->second.active_version != id) {
            adopt(o, service, id, now);
        }
    }
}

std::optional<std::string> Evolution::decide(const NodeId& node, const std::string& service_id) const {
    auto it = states_.find({node, service_id});
    const auto& peers = trusted_by(node);
    if (peers.empty()) return std::nullopt;
    std::map<std::string, std::size_t> held;
    for (const auto& p : peers) {
        auto ps = states_.find({p, service_id});
        if (ps != states_.end() && !ps->second.active_version.empty()) ++held[ps->second.active_version];
    }
    const double incumbent =
        it == states_.end() || it->second.active_version.empty() ? -1.0 : version(it->second.active_version).fitness;
    std::optional<std::string> best;
    double best_fitness = incumbent;
    for (const auto& [vid, n] : held) {
        if (it != states_.end() && vid == it->second.active_version) continue;
        if (static_cast<double>(n) < theta_ * static_cast<double>(peers.size())) continue;
        const double f = version(vid).fitness;
        // Iteration is by version id, so ties keep the smallest id.
        if (f > best_fitness) {
            best = vid;
            best_fitness = f;
        }
    }
    return best;
}

void Evolution::adopt(const NodeId& node, const std::string& service_id, const std::string& version_id, SimTime now) {
    auto [it, inserted] = states_.try_emplace({node, service_id}, AdoptionState{node, service_id, "", {}});
    if (inserted) initial_.emplace(std::make_pair(node, service_id), it->second);
    auto& s = it->second;
    log_.push_back(AdoptionRecord{now, node, service_id, s.active_version, version_id, false, 0});
    if (!s.active_version.empty()) s.history.push_back(s.active_version);
    s.active_version = version_id;
}

bool Evolution::adoption_tick(const NodeId& node, const std::string& service_id, SimTime now) {
    auto next = decide(node, service_id);
    if (!next) return false;
    adopt(node, service_id, *next, now);
    return true;
}

std::size_t Evolution::adoption_round(SimTime now, const std::function<bool(const NodeId&)>& online) {
    std::set<std::string> services;
    for (const auto& [id, v] : versions_) services.insert(v.service_id);
    std::vector<std::tuple<NodeId, std::string, std::string>> decisions;
    for (const auto& [node, peers] : trust_) {
        if (!online(node)) continue;
        for (const auto& service : services) {
            if (auto next = decide(node, service)) decisions.emplace_back(node, service, *next);
        }
    }
    for (const auto& [node, service, v] : decisions) adopt(node, service, v, now);
    return decisions.size();
}

const AdoptionState& Evolution::rollback(const NodeId& node, const std::string& service_id, std::size_t steps,
                                         SimTime now) {
    auto it = states_.find({node, service_id});
    if (steps == 0) throw Error(ErrorCode::InvalidArgument, "rollback steps must be positive");
    if (it == states_.end() || it->second.history.size() < steps) {
        throw Error(ErrorCode::HistoryUnderflow, "rollback " + std::to_string(steps));
    }
    auto& s = it->second;
    const auto from = s.active_version;
    for (std::size_t k = 0; k < steps; ++k) {
        s.active_version = s.history.back();
        s.history.pop_back();
    }
    AdoptionRecord rec{now, node, service_id, from, s.active_version, true, steps};
    log_.push_back(rec);
    return s;
}

const AdoptionState* Evolution::state(const NodeId& node, const std::string& service_id) const {
    auto it = states_.find({node, service_id});
    return it == states_.end() ? nullptr : &it->second;
}

std::vector<NodeId> Evolution::adopters(const std::string& version_id) const {
    std::vector<NodeId> out;
    for (const auto& [key, s] : states_) {
        if (s.active_version == version_id) out.push_back(key.first);
    }
    return out;
}

std::map<std::pair<NodeId, std::string>, AdoptionState> Evolution::replay(
    const std::map<std::pair<NodeId, std::string>, AdoptionState>& initial, std::span<const AdoptionRecord> log) {
    auto states = initial;
    for (const auto& rec : log) {
        auto& s = states[{rec.node, rec.service_id}];
        s.node = rec.node;
        s.service_id = rec.service_id;
        if (rec.rollback) {
            for (std::size_t k = 0; k < rec.steps; ++k) {
                if (s.history.empty()) throw Error(ErrorCode::HistoryUnderflow, "log replay");
                s.active_version = s.history.back();
                s.history.pop_back();
            }
        } else {
            if (!s.active_version.empty()) s.history.push_back(s.active_version);
            s.active_version = rec.to_version;
        }
    }
    return states;
}

void Evolution::write_csv(std::ostream& out) const {
    out << "at,node,service_id,from_version,to_version\n";
    for (const auto& r : log_) {
        out << r.at.ticks << ',' << r.node.hex() << ',' << r.service_id << ',' << r.from_version << ','
            << r.to_version << '\n';
    }
}

}  // namespace c3
