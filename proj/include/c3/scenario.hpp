#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "c3/resources.hpp"

namespace c3 {

enum class Mode : std::uint8_t { Community, Vendor };

std::string_view to_string(Mode mode) noexcept;
Mode parse_mode(std::string_view text);

struct NodeClass {
    std::string name;
    std::size_t count = 0;
    std::string region = "default";
    Resources capacity{100, 100, 100};
    std::uint32_t lanes = 1;
    double mean_online = 0.0;
    double mean_offline = 0.0;
    std::int64_t balance = 0;
    std::int64_t credit_limit = 0;
    double cost_factor = 1.0;

    bool operator==(const NodeClass&) const = default;
};

struct TopologySpec {
    std::size_t degree = 6;
    std::size_t min_degree = 3;
    std::size_t inter_region_links = 2;
    std::uint64_t intra_latency_min = 5;
    std::uint64_t intra_latency_max = 20;
    std::uint64_t inter_latency_min = 50;
    std::uint64_t inter_latency_max = 150;
    std::size_t dvsp_size = 5;
    std::uint64_t gossip_interval = 1000;
    std::uint64_t heartbeat_interval = 1000;
    std::uint64_t staleness_intervals = 3;
    double beta = 0.1;
    std::size_t replicas = 3;

    bool operator==(const TopologySpec&) const = default;
};

struct MarketSpec {
    double alpha = 0.5;
    std::int64_t p_min = 1;
    std::int64_t p_max = 1000;
    Resources initial_price{10, 10, 10};
    bool minting = false;
    std::uint64_t price_interval = 10000;

    bool operator==(const MarketSpec&) const = default;
};

enum class ServiceKind : std::uint8_t { Wiki, Video };

struct ServiceSpec {
    std::string id;
    ServiceKind kind = ServiceKind::Wiki;
    std::string version = "v1";
    Resources declared{10, 1, 1};
    std::int64_t subsidy = 0;
    std::int64_t code_size = 10;
    std::size_t min_replicas = 3;
    double fitness = 1.0;
    std::int64_t developer_balance = 0;

    bool operator==(const ServiceSpec&) const = default;
};

struct ServicesSpec {
    bool push = true;
    bool repeaters = true;
    double kappa = 4.0;
    std::size_t cooldown_windows = 3;
    std::uint64_t placement_window = 10000;
    std::vector<ServiceSpec> catalog;

    bool operator==(const ServicesSpec&) const = default;
};

struct WikiSpec {
    std::string service;
    /// Requests per 1000 ticks.
    double rate = 0.0;
    double read_fraction = 0.95;
    std::size_t pages = 100;
    std::int64_t page_size = 1;
    /// Requester region weights; empty means population-proportional.
    std::map<std::string, double> regions;

    bool operator==(const WikiSpec&) const = default;
};

struct VideoSpec {
    std::string service;
    /// Sessions per 1000 ticks.
    double rate = 0.0;
    double duration_mean = 20000.0;
    std::int64_t bitrate = 5;
    double floor = 0.8;
    std::uint64_t sustain = 3;
    std::uint64_t stream_interval = 1000;
    std::map<std::string, double> regions;

    bool operator==(const VideoSpec&) const = default;
};

struct WorkloadSpec {
    /// No requests are issued at or after this tick; 0 means the horizon.
    std::uint64_t stop = 0;
    double overrun_probability = 0.02;
    WikiSpec wiki;
    VideoSpec video;

    bool operator==(const WorkloadSpec&) const = default;
};

struct KillSpec {
    /// node:<index>, region:<name>, fraction:<f> or vendor.
    std::string target;
    std::uint64_t at = 0;
    std::uint64_t until = 0;

    bool operator==(const KillSpec&) const = default;
};

struct FailureSpec {
    /// Scales churn rates: online periods shrink by this factor.
    double churn_multiplier = 1.0;
    std::vector<KillSpec> kills;

    bool operator==(const FailureSpec&) const = default;
};

struct ReleaseSpec {
    std::string service;
    std::string version;
    std::string parent;
    double fitness = 1.0;
    std::uint64_t at = 0;
    std::size_t origin = 0;

    bool operator==(const ReleaseSpec&) const = default;
};

struct EvolutionSpec {
    double theta = 0.5;
    std::size_t trust_degree = 2;
    std::vector<ReleaseSpec> releases;

    bool operator==(const EvolutionSpec&) const = default;
};

struct VendorSpec {
    Resources capacity{4000, 1000000, 1000000};
    std::uint32_t lanes = 400;
    std::uint64_t latency = 60;

    bool operator==(const VendorSpec&) const = default;
};

struct ScenarioConfig {
    std::string name = "scenario";
    std::uint64_t seed = 1;
    std::uint64_t horizon = 100000;
    Mode mode = Mode::Community;
    std::vector<NodeClass> population;
    TopologySpec topology;
    MarketSpec market;
    ServicesSpec services;
    WorkloadSpec workload;
    FailureSpec failures;
    EvolutionSpec evolution;
    VendorSpec vendor;

    std::size_t node_count() const;
    std::uint64_t workload_stop() const { return workload.stop == 0 ? horizon : workload.stop; }
    const ServiceSpec& service(const std::string& id) const;

    bool operator==(const ScenarioConfig&) const = default;
};

/// Parses the line-oriented config format. Throws ConfigError naming the
/// offending section, key and line.
ScenarioConfig parse_scenario(std::string_view text);
ScenarioConfig load_scenario(const std::string& path);
/// Canonical text form; parse_scenario(serialize(cfg)) == cfg.
std::string serialize(const ScenarioConfig& cfg);
/// Cross-field checks. Throws ConfigError.
void validate(const ScenarioConfig& cfg);

}  // namespace c3
