#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include "CLI11.hpp"

#include "c3/error.hpp"
#include "c3/harness.hpp"
#include "c3/scenario.hpp"

namespace {

constexpr int kConfigError = 2;
constexpr int kInvariantViolation = 3;

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Community cloud discrete-event simulator"};
    std::string scenario;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> until;
    std::string out_dir;
    std::string format = "json";
    std::optional<std::string> mode;
    bool check = false;
    std::size_t sweep = 0;
    std::size_t threads = std::max(1u, std::thread::hardware_concurrency());

    app.add_option("--scenario", scenario, "Scenario config file")->required()->check(CLI::ExistingFile);
    app.add_option("--seed", seed, "Override the scenario seed");
    app.add_option("--until", until, "Override the horizon (ticks)");
    app.add_option("--out", out_dir, "Directory for the report and CSV logs");
    app.add_option("--format", format, "Report format")->check(CLI::IsMember({"json", "csv"}));
    app.add_option("--mode", mode, "Serving substrate")->check(CLI::IsMember({"community", "vendor"}));
    app.add_flag("--check", check, "Audit invariants after the run; exit 3 on violation");
    app.add_option("--sweep", sweep, "Run this many consecutive seeds starting at --seed");
    app.add_option("--threads", threads, "Workers for --sweep");
    CLI11_PARSE(app, argc, argv);

    const auto fmt = format == "csv" ? c3::ReportFormat::Csv : c3::ReportFormat::Json;
    try {
        auto cfg = c3::load_scenario(scenario);
        if (seed) cfg.seed = *seed;
        if (until) cfg.horizon = *until;
        if (mode) cfg.mode = c3::parse_mode(*mode);
        c3::validate(cfg);

        std::vector<c3::RunResult> results;
        if (sweep > 0) {
            results = c3::run_sweep(cfg, cfg.seed, sweep, threads);
        } else {
            results.push_back(c3::run_scenario(cfg));
        }

        int status = 0;
        for (const auto& r : results) {
            if (!out_dir.empty()) {
                const std::filesystem::path dir =
                    sweep > 0 ? std::filesystem::path(out_dir) / ("seed-" + std::to_string(r.cfg.seed)) : std::filesystem::path(out_dir);
                c3::write_outputs(r, dir, fmt);
            }
            if (out_dir.empty() || sweep == 0) std::cout << c3::render_report(r.report, fmt);
            if (check) {
                for (const auto& v : c3::check_invariants(r)) {
                    std::cerr << "seed " << r.cfg.seed << ": invariant violated: " << v << '\n';
                    status = kInvariantViolation;
                }
            }
        }
        return status;
    } catch (const c3::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        if (e.code() == c3::ErrorCode::ConfigError || e.code() == c3::ErrorCode::UnknownTarget) return kConfigError;
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
