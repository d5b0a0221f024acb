#include "doctest.h"

#include <cmath>
#include <map>
#include <set>

#include "c3/error.hpp"
#include "c3/resource_repo.hpp"

using namespace c3;

namespace {

NodeResourceRecord node(const std::string& name, const std::string& region, double availability = 1.0) {
    NodeResourceRecord r;
    r.id = NodeId::named(name);
    r.region = region;
    r.availability = availability;
    return r;
}

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("no error thrown");
    return ErrorCode::InvalidArgument;
}

// A record that is already fresh, with its availability pinned.
void add_fresh(ResourceRepository& repo, NodeResourceRecord r, SimTime at) {
    r.heard = true;
    r.last_heartbeat = at;
    r.free_capacity = Resources{10, 10, 10};
    repo.register_node(std::move(r));
}

}  // namespace

TEST_CASE("first heartbeat initialises availability and unknown ids are rejected") {
    ResourceRepository repo;
    repo.register_node(node("a", "eu", 0.3));
    CHECK(repo.heartbeat(NodeId::named("a"), Resources{1, 1, 1}, SimTime{0}).availability == 1.0);
    CHECK(code_of([&] { repo.heartbeat(NodeId::named("x"), Resources{}, SimTime{0}); }) == ErrorCode::UnknownNode);
    CHECK(code_of([&] { repo.miss(NodeId::named("x")); }) == ErrorCode::UnknownNode);
}

TEST_CASE("availability EWMA matches its closed forms") {
    for (double beta : {0.05, 0.1, 0.3, 0.9}) {
        ResourceRepository repo(RepoParams{beta, 1000, 3});
        const auto id = NodeId::named("a");
        repo.register_node(node("a", "eu"));
        repo.heartbeat(id, {}, SimTime{0});
        // m consecutive misses from 1.0 leave (1 - beta)^m.
        for (int m = 1; m <= 10; ++m) {
            repo.miss(id);
            CHECK(repo.record(id).availability == doctest::Approx(std::pow(1 - beta, m)).epsilon(1e-12));
        }
        // Then k heartbeats: 1 - (1 - a0)(1 - beta)^k.
        const double a0 = repo.record(id).availability;
        for (int k = 1; k <= 10; ++k) {
            repo.heartbeat(id, {}, SimTime{1000ull * k});
            CHECK(repo.record(id).availability == doctest::Approx(1 - (1 - a0) * std::pow(1 - beta, k)).epsilon(1e-12));
        }
    }
}

TEST_CASE("online half the time converges to one half as the sample weight shrinks") {
    // Alternating on/off samples settle between (1-b)/(2-b) and 1/(2-b).
    double prev_gap = 1.0;
    for (double beta : {0.5, 0.1, 0.01}) {
        ResourceRepository repo(RepoParams{beta, 1000, 3});
        const auto id = NodeId::named("a");
        repo.register_node(node("a", "eu"));
        repo.heartbeat(id, {}, SimTime{0});
        for (int i = 0; i < 20000; ++i) {
            repo.miss(id);
            repo.heartbeat(id, {}, SimTime{static_cast<std::uint64_t>(i)});
        }
        const double on = repo.record(id).availability;
        CHECK(on == doctest::Approx(1.0 / (2.0 - beta)).epsilon(1e-9));
        repo.miss(id);
        CHECK(repo.record(id).availability == doctest::Approx((1.0 - beta) / (2.0 - beta)).epsilon(1e-9));
        const double gap = std::abs(on - 0.5);
        CHECK(gap < prev_gap);
        prev_gap = gap;
    }
    CHECK(prev_gap < 0.003);
}

TEST_CASE("task history EWMA") {
    ResourceRepository repo(RepoParams{0.25, 1000, 3});
    const auto id = NodeId::named("a");
    repo.register_node(node("a", "eu"));
    repo.record_task(id, false);
    CHECK(repo.record(id).perf_history == 0.75);
    repo.record_task(id, true);
    CHECK(repo.record(id).perf_history == 0.75 * 0.75 + 0.25);
}

TEST_CASE("eligibility filters") {
    ResourceRepository repo(RepoParams{0.1, 1000, 3});
    add_fresh(repo, node("a", "eu"), SimTime{0});
    add_fresh(repo, node("b", "us"), SimTime{0});
    auto small = node("c", "eu");
    add_fresh(repo, small, SimTime{0});
    repo.heartbeat(small.id, Resources{1, 1, 1}, SimTime{0});

    ResourceQuery q;
    q.required = Resources{5, 5, 5};
    CHECK(repo.eligible(q, SimTime{0}).size() == 2);
    // Stale after staleness_intervals heartbeat intervals.
    CHECK(repo.eligible(q, SimTime{3000}).size() == 2);
    CHECK(repo.eligible(q, SimTime{3001}).empty());

    q.preferred_region = "eu";
    q.region_strict = true;
    CHECK(repo.eligible(q, SimTime{0}).size() == 1);
    q.region_strict = false;
    q.exclude.insert(NodeId::named("a"));
    CHECK(repo.eligible(q, SimTime{0}).size() == 1);

    repo.set_partition_available("us", false);
    CHECK(repo.eligible(q, SimTime{0}).empty());
    repo.set_partition_available("us", true);
    CHECK(repo.partition("eu").size() == 2);
}

TEST_CASE("query edge cases") {
    ResourceRepository repo;
    RngStream rng(1, "q");
    ResourceQuery q;
    auto empty = repo.query(q, SimTime{0}, rng);
    CHECK(empty.nodes.empty());
    CHECK(empty.insufficient);

    add_fresh(repo, node("only", "eu"), SimTime{0});
    auto one = repo.query(q, SimTime{0}, rng);
    CHECK(one.nodes == std::vector<NodeId>{NodeId::named("only")});
    CHECK_FALSE(one.insufficient);

    q.count = 3;
    auto short_result = repo.query(q, SimTime{0}, rng);
    CHECK(short_result.nodes.size() == 1);
    CHECK(short_result.insufficient);

    q.count = 0;
    CHECK(code_of([&] { repo.query(q, SimTime{0}, rng); }) == ErrorCode::InvalidArgument);
    q.count = 1;
    q.weights = QueryWeights{0.5, 0.5, 0.5, 0.0};
    CHECK(code_of([&] { repo.query(q, SimTime{0}, rng); }) == ErrorCode::InvalidArgument);
    q.weights = QueryWeights{};
    q.region_strict = true;
    CHECK(code_of([&] { repo.query(q, SimTime{0}, rng); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("composite score") {
    auto a = node("a", "eu", 0.5);
    a.perf_history = 0.8;
    a.projected_cost = 10;
    auto b = node("b", "us", 1.0);
    b.perf_history = 0.2;
    b.projected_cost = 5;
    ResourceQuery q;
    q.preferred_region = "eu";
    q.weights = QueryWeights{0.1, 0.2, 0.3, 0.4};
    auto s = ResourceRepository::scores({&a, &b}, q);
    CHECK(s[0] == doctest::Approx(0.1 * 0.8 + 0.2 * 0.5 + 0.3 * 0.0 + 0.4));
    CHECK(s[1] == doctest::Approx(0.1 * 0.2 + 0.2 * 1.0 + 0.3 * 0.5));
}

TEST_CASE("availability 0.9 vs 0.45 is picked 2:1") {
    ResourceRepository repo;
    add_fresh(repo, node("hi", "eu", 0.9), SimTime{0});
    add_fresh(repo, node("lo", "eu", 0.45), SimTime{0});
    ResourceQuery q;
    q.weights = QueryWeights{0, 1, 0, 0};
    RngStream rng(1, "pick");
    int hi = 0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) hi += repo.query(q, SimTime{0}, rng).nodes.front() == NodeId::named("hi") ? 1 : 0;
    const double ratio = static_cast<double>(hi) / (n - hi);
    CHECK(ratio == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("sampling without replacement") {
    RngStream rng(2, "wswr");
    for (int i = 0; i < 1000; ++i) {
        auto picks = weighted_sample_without_replacement({1.0, 0.0, 3.0, 2.0}, 3, rng);
        CHECK(picks.size() == 3);
        std::set<std::size_t> distinct(picks.begin(), picks.end());
        CHECK(distinct.size() == 3);
        // A zero weight is only drawn once every positive weight is gone.
        CHECK(distinct.count(1) == 0);
    }
    auto all = weighted_sample_without_replacement({0.0, 0.0}, 5, rng);
    CHECK(all.size() == 2);

    // Second draw of a 2-of-3 sample follows the renormalised weights.
    std::map<std::pair<std::size_t, std::size_t>, int> pairs;
    const int n = 60000;
    for (int i = 0; i < n; ++i) {
        auto p = weighted_sample_without_replacement({1.0, 2.0, 3.0}, 2, rng);
        ++pairs[{p[0], p[1]}];
    }
    const double w[] = {1, 2, 3};
    for (std::size_t a = 0; a < 3; ++a) {
        for (std::size_t b = 0; b < 3; ++b) {
            if (a == b) continue;
            const double expected = w[a] / 6.0 * w[b] / (6.0 - w[a]);
            const double observed = static_cast<double>(pairs[{a, b}]) / n;
            CHECK(std::abs(observed - expected) < 4 * std::sqrt(expected * (1 - expected) / n));
        }
    }
}
