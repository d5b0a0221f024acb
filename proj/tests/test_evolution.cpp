#include "doctest.h"

#include <deque>
#include <sstream>

#include "c3/error.hpp"
#include "c3/evolution.hpp"
#include "c3/rng.hpp"

using namespace c3;

namespace {

std::vector<NodeId> make_nodes(int n, const std::string& prefix = "e") {
    std::vector<NodeId> out;
    for (int i = 0; i < n; ++i) out.push_back(NodeId::named(prefix + std::to_string(i)));
    return out;
}

VersionNode ver(const std::string& id, std::optional<std::string> parent, double fitness) {
    return VersionNode{id, std::move(parent), "svc", fitness, SimTime{}};
}

// Ring plus random chords: strongly connected. trust[i] = peers i trusts.
std::vector<std::set<int>> random_trust(int n, RngStream& r, int extra) {
    std::vector<std::set<int>> t(n);
    for (int i = 0; i < n; ++i) t[i].insert((i + 1) % n);
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < extra; ++k) {
            const int j = static_cast<int>(r.uniform_below(n));
            if (j != i) t[i].insert(j);
        }
    }
    return t;
}

Evolution build(const std::vector<NodeId>& ids, const std::vector<std::set<int>>& trust, double theta) {
    Evolution e(theta);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        std::set<NodeId> peers;
        for (int j : trust[i]) peers.insert(ids[j]);
        e.set_trust(ids[i], peers);
    }
    e.add_root(ver("v1", std::nullopt, 1.0));
    for (const auto& id : ids) e.install(id, "v1");
    return e;
}

// Threshold-diffusion oracle over plain index sets.
std::vector<std::size_t> oracle_rounds(const std::vector<std::set<int>>& trust, int origin, double theta, int max_rounds) {
    std::set<int> held{origin};
    std::vector<std::size_t> sizes{held.size()};
    for (int round = 0; round < max_rounds && held.size() < trust.size(); ++round) {
        std::set<int> next = held;
        for (int i = 0; i < static_cast<int>(trust.size()); ++i) {
            std::size_t n = 0;
            for (int j : trust[i]) n += held.count(j);
            if (static_cast<double>(n) >= theta * static_cast<double>(trust[i].size())) next.insert(i);
        }
        held = std::move(next);
        sizes.push_back(held.size());
    }
    return sizes;
}

}  // namespace

TEST_CASE("threshold rule") {
    auto ids = make_nodes(4);
    Evolution e(0.5);
    e.set_trust(ids[0], {ids[1], ids[2], ids[3]});
    e.add_root(ver("v1", std::nullopt, 1.0));
    for (const auto& id : ids) e.install(id, "v1");

    CHECK_FALSE(e.adoption_tick(ids[0], "svc", SimTime{1}));

    e.release(ver("v2", "v1", 1.1), std::vector<NodeId>{ids[1], ids[2]}, SimTime{2});
    CHECK(e.adoption_tick(ids[0], "svc", SimTime{3}));
    CHECK(e.state(ids[0], "svc")->active_version == "v2");
}

TEST_CASE("lower or equal fitness is never adopted") {
    auto ids = make_nodes(4);
    Evolution e(0.5);
    e.set_trust(ids[0], {ids[1], ids[2], ids[3]});
    e.add_root(ver("v1", std::nullopt, 1.0));
    for (const auto& id : ids) e.install(id, "v1");
    e.release(ver("worse", "v1", 0.5), std::vector<NodeId>{ids[1], ids[2], ids[3]}, SimTime{1});
    CHECK_FALSE(e.adoption_tick(ids[0], "svc", SimTime{2}));
    e.release(ver("same", "v1", 1.0), std::vector<NodeId>{ids[1], ids[2], ids[3]}, SimTime{3});
    CHECK_FALSE(e.adoption_tick(ids[0], "svc", SimTime{4}));
    CHECK(e.state(ids[0], "svc")->active_version == "v1");
}

TEST_CASE("no in-links, no diffusion") {
    auto ids = make_nodes(5);
    Evolution e(0.5);
    // Nodes 1..4 trust each other in a cycle; nobody trusts node 0.
    for (int i = 1; i < 5; ++i) e.set_trust(ids[i], {ids[(i % 4) + 1]});
    e.add_root(ver("v1", std::nullopt, 1.0));
    for (const auto& id : ids) e.install(id, "v1");
    e.release(ver("v2", "v1", 2.0), std::vector<NodeId>{ids[0]}, SimTime{0});
    for (int r = 1; r <= 10; ++r) e.adoption_round(SimTime{static_cast<std::uint64_t>(r)}, [](const NodeId&) { return true; });
    CHECK(e.adopters("v2") == std::vector<NodeId>{ids[0]});
}

TEST_CASE("diffusion matches the threshold oracle round by round") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        RngStream r(seed, "trust");
        const int n = 50;
        auto trust = random_trust(n, r, 2);
        auto ids = make_nodes(n);
        for (double theta : {0.2, 0.34, 0.5}) {
            auto e = build(ids, trust, theta);
            e.release(ver("v2", "v1", 1.1), std::vector<NodeId>{ids[0]}, SimTime{0});
            const auto expected = oracle_rounds(trust, 0, theta, 200);
            std::vector<std::size_t> got{e.adopters("v2").size()};
            for (std::size_t round = 1; round < expected.size(); ++round) {
                e.adoption_round(SimTime{round}, [](const NodeId&) { return true; });
                got.push_back(e.adopters("v2").size());
            }
            CHECK(got == expected);
        }
    }
}

TEST_CASE("single-peer threshold spreads at breadth-first speed") {
    RngStream r(3, "trust");
    const int n = 50;
    auto trust = random_trust(n, r, 2);
    auto ids = make_nodes(n);
    // theta small enough that any one trusted adopter suffices.
    auto e = build(ids, trust, 0.01);
    e.release(ver("v2", "v1", 1.1), std::vector<NodeId>{ids[0]}, SimTime{0});

    // BFS from the origin over reversed trust links.
    std::vector<int> depth(n, -1);
    depth[0] = 0;
    std::deque<int> q{0};
    while (!q.empty()) {
        const int u = q.front();
        q.pop_front();
        for (int v = 0; v < n; ++v) {
            if (depth[v] < 0 && trust[v].count(u)) {
                depth[v] = depth[u] + 1;
                q.push_back(v);
            }
        }
    }
    const int ecc = *std::max_element(depth.begin(), depth.end());
    int rounds = 0;
    while (e.adopters("v2").size() < static_cast<std::size_t>(n)) {
        e.adoption_round(SimTime{static_cast<std::uint64_t>(++rounds)}, [](const NodeId&) { return true; });
        REQUIRE(rounds <= n);
    }
    CHECK(rounds == ecc);
}

TEST_CASE("offline nodes hold their version") {
    auto ids = make_nodes(3);
    Evolution e(0.5);
    e.set_trust(ids[1], {ids[0]});
    e.set_trust(ids[2], {ids[0]});
    e.add_root(ver("v1", std::nullopt, 1.0));
    for (const auto& id : ids) e.install(id, "v1");
    e.release(ver("v2", "v1", 2.0), std::vector<NodeId>{ids[0]}, SimTime{0});
    e.adoption_round(SimTime{1}, [&](const NodeId& id) { return id != ids[2]; });
    CHECK(e.state(ids[1], "svc")->active_version == "v2");
    CHECK(e.state(ids[2], "svc")->active_version == "v1");
}

TEST_CASE("branches in disjoint trust components never mix") {
    auto left = make_nodes(10, "l"), right = make_nodes(10, "r");
    Evolution e(0.5);
    for (int i = 0; i < 10; ++i) {
        e.set_trust(left[i], {left[(i + 1) % 10]});
        e.set_trust(right[i], {right[(i + 1) % 10]});
    }
    e.add_root(ver("v1", std::nullopt, 1.0));
    for (const auto& id : left) e.install(id, "v1");
    for (const auto& id : right) e.install(id, "v1");
    e.release(ver("a", "v1", 2.0), std::vector<NodeId>{left[0]}, SimTime{0});
    e.release(ver("b", "v1", 3.0), std::vector<NodeId>{right[0]}, SimTime{0});
    for (int r = 1; r <= 20; ++r) e.adoption_round(SimTime{static_cast<std::uint64_t>(r)}, [](const NodeId&) { return true; });
    auto a = e.adopters("a"), b = e.adopters("b");
    CHECK(a.size() == 10);
    CHECK(b.size() == 10);
    for (const auto& id : a) CHECK(std::find(b.begin(), b.end(), id) == b.end());
}

TEST_CASE("rollback") {
    auto ids = make_nodes(1);
    Evolution e(0.5);
    e.add_root(ver("v1", std::nullopt, 1.0));
    e.install(ids[0], "v1");
    e.release(ver("v2", "v1", 2.0), ids, SimTime{1});
    CHECK(e.rollback(ids[0], "svc", 1, SimTime{2}).active_version == "v1");
    e.release(ver("v3", "v2", 3.0), ids, SimTime{3});
    try {
        e.rollback(ids[0], "svc", 2, SimTime{4});
        FAIL("expected underflow");
    } catch (const Error& err) {
        CHECK(err.code() == ErrorCode::HistoryUnderflow);
    }
    CHECK_THROWS_AS(e.release(ver("orphan", "missing", 1.0), ids, SimTime{5}), Error);
}

TEST_CASE("adopt twice, roll back twice, replay the log") {
    auto ids = make_nodes(1);
    Evolution e(0.5);
    e.add_root(ver("v1", std::nullopt, 1.0));
    e.install(ids[0], "v1");
    const auto start = *e.state(ids[0], "svc");
    e.release(ver("v2", "v1", 2.0), ids, SimTime{1});
    e.release(ver("v3", "v2", 3.0), ids, SimTime{2});
    e.rollback(ids[0], "svc", 2, SimTime{3});
    CHECK(*e.state(ids[0], "svc") == start);
    CHECK(Evolution::replay(e.initial_states(), e.log()) == e.states());
}

TEST_CASE("property: random adopt/rollback sequences are exact and replayable") {
    RngStream r(99, "rollback-prop");
    auto ids = make_nodes(3);
    for (int seq = 0; seq < 1000; ++seq) {
        Evolution e(0.5);
        e.add_root(ver("v0", std::nullopt, 0.0));
        for (const auto& id : ids) e.install(id, "v0");
        int next = 1;
        std::map<NodeId, std::vector<AdoptionState>> snapshots;
        for (const auto& id : ids) snapshots[id].push_back(*e.state(id, "svc"));
        const int steps = 1 + static_cast<int>(r.uniform_below(20));
        for (int s = 0; s < steps; ++s) {
            const auto& node = ids[r.uniform_below(ids.size())];
            auto& snaps = snapshots[node];
            const auto depth = e.state(node, "svc")->history.size();
            if (depth > 0 && r.bernoulli(0.4)) {
                const auto k = 1 + r.uniform_below(depth);
                e.rollback(node, "svc", k, SimTime{static_cast<std::uint64_t>(s)});
                snaps.resize(snaps.size() - k);
                CHECK(*e.state(node, "svc") == snaps.back());
            } else {
                const auto id = "v" + std::to_string(next);
                e.release(ver(id, "v0", static_cast<double>(next)), std::vector<NodeId>{node},
                          SimTime{static_cast<std::uint64_t>(s)});
                ++next;
                snaps.push_back(*e.state(node, "svc"));
            }
        }
        CHECK(Evolution::replay(e.initial_states(), e.log()) == e.states());
    }
}

TEST_CASE("fitness increases along adoption sequences") {
    RngStream r(5, "trust");
    auto trust = random_trust(30, r, 3);
    auto ids = make_nodes(30);
    auto e = build(ids, trust, 0.34);
    e.release(ver("v2", "v1", 2.0), std::vector<NodeId>{ids[0]}, SimTime{0});
    e.release(ver("v3", "v2", 3.0), std::vector<NodeId>{ids[5]}, SimTime{0});
    e.release(ver("v4", "v1", 2.5), std::vector<NodeId>{ids[9]}, SimTime{0});
    for (int k = 1; k <= 40; ++k) e.adoption_round(SimTime{static_cast<std::uint64_t>(k)}, [](const NodeId&) { return true; });
    for (const auto& rec : e.log()) {
        if (rec.rollback || rec.from_version.empty()) continue;
        const double f = e.version(rec.to_version).fitness;
        CHECK(f > e.version(rec.from_version).fitness);
    }
    std::ostringstream csv;
    e.write_csv(csv);
    CHECK(csv.str().rfind("at,node,service_id,from_version,to_version\n", 0) == 0);
}
