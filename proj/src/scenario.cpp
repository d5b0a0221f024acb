#include "c3/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "c3/error.hpp"

namespace c3 {

std::string_view to_string(Mode mode) noexcept { return mode == Mode::Community ? "community" : "vendor"; }

Mode parse_mode(std::string_view text) {
    if (text == "community") return Mode::Community;
    if (text == "vendor" || text == "vendor-baseline") return Mode::Vendor;
    throw Error(ErrorCode::ConfigError, "mode must be community or vendor, got '" + std::string(text) + "'");
}

std::size_t ScenarioConfig::node_count() const {
    std::size_t n = 0;
    for (const auto& c : population) n += c.count;
    return n;
}

const ServiceSpec& ScenarioConfig::service(const std::string& id) const {
    for (const auto& s : services.catalog) {
        if (s.id == id) return s;
    }
    throw Error(ErrorCode::ConfigError, "unknown service '" + id + "'");
}

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
    throw Error(ErrorCode::ConfigError, where + ": " + what);
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::uint64_t to_u64(const std::string& v, const std::string& where) {
    std::uint64_t out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size()) fail(where, "expected a non-negative integer, got '" + v + "'");
    return out;
}

std::int64_t to_i64(const std::string& v, const std::string& where) {
    std::int64_t out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size()) fail(where, "expected an integer, got '" + v + "'");
    return out;
}

double to_f64(const std::string& v, const std::string& where) {
    double out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size() || !std::isfinite(out)) {
        fail(where, "expected a number, got '" + v + "'");
    }
    return out;
}

bool to_bool(const std::string& v, const std::string& where) {
    if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
    if (v == "false" || v == "no" || v == "off" || v == "0") return false;
    fail(where, "expected true or false, got '" + v + "'");
}

std::map<std::string, double> to_weights(const std::string& v, const std::string& where) {
    std::map<std::string, double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        const auto colon = item.find(':');
        if (colon == std::string::npos) fail(where, "expected region:weight pairs, got '" + item + "'");
        out[trim(item.substr(0, colon))] = to_f64(trim(item.substr(colon + 1)), where);
    }
    return out;
}

std::vector<std::string> words(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string w;
    while (ss >> w) out.push_back(w);
    return out;
}

std::string fmt(double d) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, d);
    return std::string(buf, p);
}

std::string fmt_weights(const std::map<std::string, double>& w) {
    std::string out;
    for (const auto& [r, x] : w) {
        if (!out.empty()) out += ',';
        out += r + ":" + fmt(x);
    }
    return out;
}

template <typename T>
T& named(std::vector<T>& list, const std::string& name, auto&& get_name) {
    for (auto& item : list) {
        if (get_name(item) == name) return item;
    }
    list.emplace_back();
    get_name(list.back()) = name;
    return list.back();
}

void set_resource(Resources& r, const std::string& field, std::int64_t v) {
    if (field == "compute") r.compute = v;
    else if (field == "storage") r.storage = v;
    else r.bandwidth = v;
}

bool is_resource(const std::string& f) { return f == "compute" || f == "storage" || f == "bandwidth"; }

ServiceKind to_kind(const std::string& v, const std::string& where) {
    if (v == "wiki") return ServiceKind::Wiki;
    if (v == "video") return ServiceKind::Video;
    fail(where, "service kind must be wiki or video, got '" + v + "'");
}

struct Parser {
    ScenarioConfig cfg;
    std::set<std::string> seen;

    void scenario(const std::string& key, const std::string& v, const std::string& where) {
        if (key == "name") cfg.name = v;
        else if (key == "seed") cfg.seed = to_u64(v, where);
        else if (key == "horizon") cfg.horizon = to_u64(v, where);
        else if (key == "mode") {
            try {
                cfg.mode = parse_mode(v);
            } catch (const Error& e) {
                fail(where, e.what());
            }
        } else fail(where, "unknown key");
    }

    void population(const std::string& key, const std::string& v, const std::string& where) {
        const auto dot = key.find('.');
        if (dot == std::string::npos) fail(where, "expected <class>.<field>");
        auto& c = named(cfg.population, key.substr(0, dot), [](NodeClass& n) -> std::string& { return n.name; });
        const auto f = key.substr(dot + 1);
        if (f == "count") c.count = to_u64(v, where);
        else if (f == "region") c.region = v;
        else if (is_resource(f)) set_resource(c.capacity, f, to_i64(v, where));
        else if (f == "lanes") c.lanes = static_cast<std::uint32_t>(to_u64(v, where));
        else if (f == "mean_online") c.mean_online = to_f64(v, where);
        else if (f == "mean_offline") c.mean_offline = to_f64(v, where);
        else if (f == "balance") c.balance = to_i64(v, where);
        else if (f == "credit_limit") c.credit_limit = to_i64(v, where);
        else if (f == "cost_factor") c.cost_factor = to_f64(v, where);
        else fail(where, "unknown node class field '" + f + "'");
    }

    void topology(const std::string& key, const std::string& v, const std::string& where) {
        auto& t = cfg.topology;
        if (key == "degree") t.degree = to_u64(v, where);
        else if (key == "min_degree") t.min_degree = to_u64(v, where);
        else if (key == "inter_region_links") t.inter_region_links = to_u64(v, where);
        else if (key == "intra_latency_min") t.intra_latency_min = to_u64(v, where);
        else if (key == "intra_latency_max") t.intra_latency_max = to_u64(v, where);
        else if (key == "inter_latency_min") t.inter_latency_min = to_u64(v, where);
        else if (key == "inter_latency_max") t.inter_latency_max = to_u64(v, where);
        else if (key == "dvsp_size") t.dvsp_size = to_u64(v, where);
        else if (key == "gossip_interval") t.gossip_interval = to_u64(v, where);
        else if (key == "heartbeat_interval") t.heartbeat_interval = to_u64(v, where);
        else if (key == "staleness_intervals") t.staleness_intervals = to_u64(v, where);
        else if (key == "beta") t.beta = to_f64(v, where);
        else if (key == "replicas") t.replicas = to_u64(v, where);
        else fail(where, "unknown key");
    }

    void market(const std::string& key, const std::string& v, const std::string& where) {
        auto& m = cfg.market;
        if (key == "alpha") m.alpha = to_f64(v, where);
        else if (key == "p_min") m.p_min = to_i64(v, where);
        else if (key == "p_max") m.p_max = to_i64(v, where);
        else if (key == "price_compute") m.initial_price.compute = to_i64(v, where);
        else if (key == "price_storage") m.initial_price.storage = to_i64(v, where);
        else if (key == "price_bandwidth") m.initial_price.bandwidth = to_i64(v, where);
        else if (key == "minting") m.minting = to_bool(v, where);
        else if (key == "price_interval") m.price_interval = to_u64(v, where);
        else fail(where, "unknown key");
    }

    void services(const std::string& key, const std::string& v, const std::string& where) {
        auto& s = cfg.services;
        if (key == "push") s.push = to_bool(v, where);
        else if (key == "repeaters") s.repeaters = to_bool(v, where);
        else if (key == "kappa") s.kappa = to_f64(v, where);
        else if (key == "cooldown_windows") s.cooldown_windows = to_u64(v, where);
        else if (key == "placement_window") s.placement_window = to_u64(v, where);
        else {
            const auto dot = key.find('.');
            if (dot == std::string::npos) fail(where, "unknown key");
            auto& d = named(s.catalog, key.substr(0, dot), [](ServiceSpec& x) -> std::string& { return x.id; });
            const auto f = key.substr(dot + 1);
            if (f == "kind") d.kind = to_kind(v, where);
            else if (f == "version") d.version = v;
            else if (is_resource(f)) set_resource(d.declared, f, to_i64(v, where));
            else if (f == "subsidy") d.subsidy = to_i64(v, where);
            else if (f == "code_size") d.code_size = to_i64(v, where);
            else if (f == "min_replicas") d.min_replicas = to_u64(v, where);
            else if (f == "fitness") d.fitness = to_f64(v, where);
            else if (f == "developer_balance") d.developer_balance = to_i64(v, where);
            else fail(where, "unknown service field '" + f + "'");
        }
    }

    void workload(const std::string& key, const std::string& v, const std::string& where) {
        auto& w = cfg.workload;
        if (key == "stop") w.stop = to_u64(v, where);
        else if (key == "overrun_probability") w.overrun_probability = to_f64(v, where);
        else if (key == "wiki.service") w.wiki.service = v;
        else if (key == "wiki.rate") w.wiki.rate = to_f64(v, where);
        else if (key == "wiki.read_fraction") w.wiki.read_fraction = to_f64(v, where);
        else if (key == "wiki.pages") w.wiki.pages = to_u64(v, where);
        else if (key == "wiki.page_size") w.wiki.page_size = to_i64(v, where);
        else if (key == "wiki.regions") w.wiki.regions = to_weights(v, where);
        else if (key == "video.service") w.video.service = v;
        else if (key == "video.rate") w.video.rate = to_f64(v, where);
        else if (key == "video.duration_mean") w.video.duration_mean = to_f64(v, where);
        else if (key == "video.bitrate") w.video.bitrate = to_i64(v, where);
        else if (key == "video.floor") w.video.floor = to_f64(v, where);
        else if (key == "video.sustain") w.video.sustain = to_u64(v, where);
        else if (key == "video.stream_interval") w.video.stream_interval = to_u64(v, where);
        else if (key == "video.regions") w.video.regions = to_weights(v, where);
        else fail(where, "unknown key");
    }

    void failures(const std::string& key, const std::string& v, const std::string& where) {
        if (key == "churn_multiplier") {
            cfg.failures.churn_multiplier = to_f64(v, where);
        } else if (key.rfind("kill.", 0) == 0) {
            const auto w = words(v);
            if (w.size() != 3) fail(where, "expected '<target> <at> <until>'");
            cfg.failures.kills.push_back(KillSpec{w[0], to_u64(w[1], where), to_u64(w[2], where)});
        } else {
            fail(where, "unknown key");
        }
    }

    void evolution(const std::string& key, const std::string& v, const std::string& where) {
        auto& e = cfg.evolution;
        if (key == "theta") e.theta = to_f64(v, where);
        else if (key == "trust_degree") e.trust_degree = to_u64(v, where);
        else if (key.rfind("release.", 0) == 0) {
            const auto w = words(v);
            if (w.size() != 6) fail(where, "expected '<service> <version> <parent> <fitness> <at> <origin>'");
            e.releases.push_back(ReleaseSpec{w[0], w[1], w[2], to_f64(w[3], where), to_u64(w[4], where),
                                             static_cast<std::size_t>(to_u64(w[5], where))});
        } else fail(where, "unknown key");
    }

    void vendor(const std::string& key, const std::string& v, const std::string& where) {
        auto& s = cfg.vendor;
        if (is_resource(key)) set_resource(s.capacity, key, to_i64(v, where));
        else if (key == "lanes") s.lanes = static_cast<std::uint32_t>(to_u64(v, where));
        else if (key == "latency") s.latency = to_u64(v, where);
        else fail(where, "unknown key");
    }
};

}  // namespace

ScenarioConfig parse_scenario(std::string_view text) {
    Parser p;
    std::string section;
    std::size_t line_no = 0;
    std::istringstream in{std::string(text)};
    std::string raw;
    using Handler = void (Parser::*)(const std::string&, const std::string&, const std::string&);
    const std::map<std::string, Handler> handlers{
        {"scenario", &Parser::scenario}, {"population", &Parser::population}, {"topology", &Parser::topology},
        {"market", &Parser::market},     {"services", &Parser::services},     {"workload", &Parser::workload},
        {"failures", &Parser::failures}, {"evolution", &Parser::evolution},   {"vendor", &Parser::vendor},
    };
    while (std::getline(in, raw)) {
        ++line_no;
        const auto hash = raw.find('#');
        const auto line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;
        const std::string at = "line " + std::to_string(line_no);
        if (line.front() == '[') {
            if (line.back() != ']') fail(at, "unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (handlers.count(section) == 0) fail(at, "unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) fail(at, "expected key = value");
        if (section.empty()) fail(at, "key outside of a section");
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        const auto where = at + ": [" + section + "] " + key;
        if (!p.seen.insert(section + "/" + key).second) fail(where, "duplicate key");
        (p.*handlers.at(section))(key, value, where);
    }
    validate(p.cfg);
    return p.cfg;
}

ScenarioConfig load_scenario(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::ConfigError, path + ": cannot open");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str());
}

void validate(const ScenarioConfig& cfg) {
    auto check = [](bool ok, const std::string& where, const std::string& what) {
        if (!ok) fail(where, what);
    };
    check(cfg.horizon > 0, "[scenario] horizon", "must be positive");
    check(!cfg.population.empty(), "[population]", "at least one node class is required");
    std::set<std::string> regions;
    for (const auto& c : cfg.population) {
        const auto w = "[population] " + c.name;
        check(c.count > 0, w + ".count", "must be positive");
        check(c.capacity.non_negative(), w, "capacities must be non-negative");
        check(c.capacity.compute > 0, w + ".compute", "must be positive");
        check(c.lanes > 0, w + ".lanes", "must be positive");
        check(c.mean_online >= 0 && c.mean_offline >= 0, w, "uptime means must be non-negative");
        check(c.mean_offline <= 0 || c.mean_online > 0, w + ".mean_online", "must be positive when nodes churn");
        check(c.credit_limit >= 0, w + ".credit_limit", "must be non-negative");
        check(c.balance >= -c.credit_limit, w + ".balance", "below the credit floor");
        check(c.cost_factor > 0, w + ".cost_factor", "must be positive");
        regions.insert(c.region);
    }
    const auto& t = cfg.topology;
    check(t.degree > 0, "[topology] degree", "must be positive");
    check(t.min_degree <= t.degree, "[topology] min_degree", "must not exceed degree");
    check(t.intra_latency_min > 0 && t.intra_latency_min <= t.intra_latency_max, "[topology] intra_latency",
          "need 0 < min <= max");
    check(t.inter_latency_min > 0 && t.inter_latency_min <= t.inter_latency_max, "[topology] inter_latency",
          "need 0 < min <= max");
    check(t.dvsp_size > 0, "[topology] dvsp_size", "must be positive");
    check(t.gossip_interval > 0 && t.heartbeat_interval > 0, "[topology]", "intervals must be positive");
    check(t.staleness_intervals > 0, "[topology] staleness_intervals", "must be positive");
    check(t.beta > 0 && t.beta < 1, "[topology] beta", "must be in (0,1)");
    check(t.replicas > 0, "[topology] replicas", "must be positive");
    const auto& m = cfg.market;
    check(m.alpha > 0, "[market] alpha", "must be positive");
    check(m.p_min > 0 && m.p_min <= m.p_max, "[market] p_min", "need 0 < p_min <= p_max");
    for (auto k : kAllResources) {
        check(m.initial_price[k] >= m.p_min && m.initial_price[k] <= m.p_max, "[market] price_" + std::string(to_string(k)),
              "must lie in [p_min, p_max]");
    }
    check(m.price_interval > 0, "[market] price_interval", "must be positive");
    const auto& s = cfg.services;
    check(s.kappa >= 0, "[services] kappa", "must be non-negative");
    check(s.placement_window > 0, "[services] placement_window", "must be positive");
    std::set<std::string> ids;
    for (const auto& d : s.catalog) {
        const auto w = "[services] " + d.id;
        check(ids.insert(d.id).second, w, "duplicate service");
        check(d.declared.non_negative(), w, "declared cost must be non-negative");
        check(d.subsidy >= 0, w + ".subsidy", "must be non-negative");
        check(d.code_size >= 0, w + ".code_size", "must be non-negative");
        check(d.min_replicas > 0, w + ".min_replicas", "must be positive");
        check(d.fitness >= 0, w + ".fitness", "must be non-negative");
        check(d.developer_balance >= 0, w + ".developer_balance", "must be non-negative");
    }
    const auto& wl = cfg.workload;
    check(wl.overrun_probability >= 0 && wl.overrun_probability <= 1, "[workload] overrun_probability",
          "must be in [0,1]");
    auto check_regions = [&](const std::map<std::string, double>& w, const std::string& where) {
        double sum = 0;
        for (const auto& [r, x] : w) {
            check(regions.count(r) > 0, where, "unknown region '" + r + "'");
            check(x >= 0, where, "weights must be non-negative");
            sum += x;
        }
        check(w.empty() || sum > 0, where, "weights must not all be zero");
    };
    if (wl.wiki.rate > 0) {
        check(ids.count(wl.wiki.service) > 0, "[workload] wiki.service", "unknown service '" + wl.wiki.service + "'");
        check(wl.wiki.read_fraction >= 0 && wl.wiki.read_fraction <= 1, "[workload] wiki.read_fraction",
              "must be in [0,1]");
        check(wl.wiki.pages > 0, "[workload] wiki.pages", "must be positive");
        check(wl.wiki.page_size > 0, "[workload] wiki.page_size", "must be positive");
        check_regions(wl.wiki.regions, "[workload] wiki.regions");
    }
    check(wl.wiki.rate >= 0 && wl.video.rate >= 0, "[workload]", "rates must be non-negative");
    if (wl.video.rate > 0) {
        check(ids.count(wl.video.service) > 0, "[workload] video.service", "unknown service '" + wl.video.service + "'");
        check(wl.video.duration_mean > 0, "[workload] video.duration_mean", "must be positive");
        check(wl.video.bitrate > 0, "[workload] video.bitrate", "must be positive");
        check(wl.video.floor >= 0 && wl.video.floor <= 1, "[workload] video.floor", "must be in [0,1]");
        check(wl.video.sustain > 0, "[workload] video.sustain", "must be positive");
        check(wl.video.stream_interval > 0, "[workload] video.stream_interval", "must be positive");
        check_regions(wl.video.regions, "[workload] video.regions");
    }
    check(cfg.failures.churn_multiplier > 0, "[failures] churn_multiplier", "must be positive");
    for (const auto& k : cfg.failures.kills) {
        check(k.at < k.until, "[failures] kill " + k.target, "needs at < until");
    }
    check(cfg.evolution.theta > 0 && cfg.evolution.theta <= 1, "[evolution] theta", "must be in (0,1]");
    for (const auto& r : cfg.evolution.releases) {
        check(ids.count(r.service) > 0, "[evolution] release " + r.version, "unknown service '" + r.service + "'");
        check(r.fitness >= 0, "[evolution] release " + r.version, "fitness must be non-negative");
    }
    check(cfg.vendor.lanes > 0 && cfg.vendor.capacity.compute > 0, "[vendor]", "compute and lanes must be positive");
}

std::string serialize(const ScenarioConfig& cfg) {
    std::ostringstream o;
    o << "[scenario]\nname = " << cfg.name << "\nseed = " << cfg.seed << "\nhorizon = " << cfg.horizon
      << "\nmode = " << to_string(cfg.mode) << "\n\n[population]\n";
    for (const auto& c : cfg.population) {
        const auto p = c.name + ".";
        o << p << "count = " << c.count << '\n'
          << p << "region = " << c.region << '\n'
          << p << "compute = " << c.capacity.compute << '\n'
          << p << "storage = " << c.capacity.storage << '\n'
          << p << "bandwidth = " << c.capacity.bandwidth << '\n'
          << p << "lanes = " << c.lanes << '\n'
          << p << "mean_online = " << fmt(c.mean_online) << '\n'
          << p << "mean_offline = " << fmt(c.mean_offline) << '\n'
          << p << "balance = " << c.balance << '\n'
          << p << "credit_limit = " << c.credit_limit << '\n'
          << p << "cost_factor = " << fmt(c.cost_factor) << '\n';
    }
    const auto& t = cfg.topology;
    o << "\n[topology]\ndegree = " << t.degree << "\nmin_degree = " << t.min_degree
      << "\ninter_region_links = " << t.inter_region_links << "\nintra_latency_min = " << t.intra_latency_min
      << "\nintra_latency_max = " << t.intra_latency_max << "\ninter_latency_min = " << t.inter_latency_min
      << "\ninter_latency_max = " << t.inter_latency_max << "\ndvsp_size = " << t.dvsp_size
      << "\ngossip_interval = " << t.gossip_interval << "\nheartbeat_interval = " << t.heartbeat_interval
      << "\nstaleness_intervals = " << t.staleness_intervals << "\nbeta = " << fmt(t.beta)
      << "\nreplicas = " << t.replicas << '\n';
    const auto& m = cfg.market;
    o << "\n[market]\nalpha = " << fmt(m.alpha) << "\np_min = " << m.p_min << "\np_max = " << m.p_max
      << "\nprice_compute = " << m.initial_price.compute << "\nprice_storage = " << m.initial_price.storage
      << "\nprice_bandwidth = " << m.initial_price.bandwidth << "\nminting = " << (m.minting ? "true" : "false")
      << "\nprice_interval = " << m.price_interval << '\n';
    const auto& s = cfg.services;
    o << "\n[services]\npush = " << (s.push ? "true" : "false") << "\nrepeaters = " << (s.repeaters ? "true" : "false")
      << "\nkappa = " << fmt(s.kappa) << "\ncooldown_windows = " << s.cooldown_windows
      << "\nplacement_window = " << s.placement_window << '\n';
    for (const auto& d : s.catalog) {
        const auto p = d.id + ".";
        o << p << "kind = " << (d.kind == ServiceKind::Wiki ? "wiki" : "video") << '\n'
          << p << "version = " << d.version << '\n'
          << p << "compute = " << d.declared.compute << '\n'
          << p << "storage = " << d.declared.storage << '\n'
          << p << "bandwidth = " << d.declared.bandwidth << '\n'
          << p << "subsidy = " << d.subsidy << '\n'
          << p << "code_size = " << d.code_size << '\n'
          << p << "min_replicas = " << d.min_replicas << '\n'
          << p << "fitness = " << fmt(d.fitness) << '\n'
          << p << "developer_balance = " << d.developer_balance << '\n';
    }
    const auto& w = cfg.workload;
    o << "\n[workload]\nstop = " << w.stop << "\noverrun_probability = " << fmt(w.overrun_probability)
      << "\nwiki.service = " << w.wiki.service << "\nwiki.rate = " << fmt(w.wiki.rate)
      << "\nwiki.read_fraction = " << fmt(w.wiki.read_fraction) << "\nwiki.pages = " << w.wiki.pages
      << "\nwiki.page_size = " << w.wiki.page_size << "\nwiki.regions = " << fmt_weights(w.wiki.regions)
      << "\nvideo.service = " << w.video.service << "\nvideo.rate = " << fmt(w.video.rate)
      << "\nvideo.duration_mean = " << fmt(w.video.duration_mean) << "\nvideo.bitrate = " << w.video.bitrate
      << "\nvideo.floor = " << fmt(w.video.floor) << "\nvideo.sustain = " << w.video.sustain
      << "\nvideo.stream_interval = " << w.video.stream_interval
      << "\nvideo.regions = " << fmt_weights(w.video.regions) << '\n';
    o << "\n[failures]\nchurn_multiplier = " << fmt(cfg.failures.churn_multiplier) << '\n';
    for (std::size_t i = 0; i < cfg.failures.kills.size(); ++i) {
        const auto& k = cfg.failures.kills[i];
        o << "kill." << i + 1 << " = " << k.target << ' ' << k.at << ' ' << k.until << '\n';
    }
    o << "\n[evolution]\ntheta = " << fmt(cfg.evolution.theta) << "\ntrust_degree = " << cfg.evolution.trust_degree
      << '\n';
    for (std::size_t i = 0; i < cfg.evolution.releases.size(); ++i) {
        const auto& r = cfg.evolution.releases[i];
        o << "release." << i + 1 << " = " << r.service << ' ' << r.version << ' ' << r.parent << ' ' << fmt(r.fitness)
          << ' ' << r.at << ' ' << r.origin << '\n';
    }
    const auto& v = cfg.vendor;
    o << "\n[vendor]\ncompute = " << v.capacity.compute << "\nstorage = " << v.capacity.storage
      << "\nbandwidth = " << v.capacity.bandwidth << "\nlanes = " << v.lanes << "\nlatency = " << v.latency << '\n';
    return o.str();
}

}  // namespace c3
