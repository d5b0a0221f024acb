#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "c3/engine.hpp"
#include "c3/evolution.hpp"
#include "c3/ledger.hpp"
#include "c3/node_id.hpp"
#include "c3/resources.hpp"
#include "c3/scenario.hpp"
#include "c3/services.hpp"

namespace c3 {

enum class WorkKind : std::uint8_t { WikiRead, WikiWrite, Video };

std::string_view to_string(WorkKind kind) noexcept;

struct WorkItem {
    std::uint64_t id = 0;
    WorkKind kind = WorkKind::WikiRead;
    SimTime at;
    std::size_t requester = 0;
    std::string service;
    Resources actual;
    std::size_t page = 0;
    /// Streaming duration for video sessions.
    std::uint64_t duration = 0;
};

/// Regions of the expanded population, in node-index order.
std::vector<std::string> node_regions(const ScenarioConfig& cfg);

/// Poisson read/write stream over wiki pages. Ids are left at 0.
std::vector<WorkItem> workload_wiki(const ScenarioConfig& cfg, const std::vector<std::string>& regions);
/// Poisson arrivals of streaming sessions, each opened by a transcode request.
std::vector<WorkItem> workload_video(const ScenarioConfig& cfg, const std::vector<std::string>& regions);
/// Both streams merged in arrival order with sequential ids. Depends only on
/// the seed and the workload/population sections, never on the mode.
std::vector<WorkItem> generate_workload(const ScenarioConfig& cfg);

struct NodeRow {
    std::size_t index = 0;
    NodeId id;
    std::string region;
    Resources capacity;
    std::uint32_t lanes = 1;
    /// Hosts service executions (false for requester-only nodes).
    bool serves = true;
};

struct MembershipRow {
    std::uint64_t at = 0;
    NodeId node;
    bool joined = false;
    std::string cause;
};

struct RequestRow {
    std::uint64_t id = 0;
    WorkKind kind = WorkKind::WikiRead;
    std::uint64_t issued_at = 0;
    NodeId requester;
    std::string region;
    std::string service;
    std::optional<NodeId> host;
    /// An Outcome name, or "dropped" (requester offline) / "unfinished".
    std::string outcome;
    std::uint64_t finished_at = 0;
    std::int64_t debit = 0;
    std::int64_t credit = 0;
    std::int64_t subsidy = 0;
    Resources declared;
    Resources consumed;
    bool settled = false;
    bool pulled = false;
};

struct StatusRow {
    std::uint64_t at = 0;
    std::string service;
    bool available = true;
};

struct ConvergenceRow {
    std::string key;
    NodeId writer;
    std::uint64_t at = 0;
    std::optional<std::uint64_t> agreed_at;
    /// Start of the write-free, reconnected segment that ended in agreement.
    std::optional<std::uint64_t> quiesced_at;
};

struct SessionRow {
    std::uint64_t id = 0;
    NodeId requester;
    std::uint64_t started_at = 0;
    std::uint64_t ended_at = 0;
    /// completed, failed or dropped.
    std::string outcome;
    std::uint64_t low_ticks = 0;
    std::uint64_t failovers = 0;
};

struct Logs {
    std::vector<NodeRow> nodes;
    std::vector<MembershipRow> membership;
    std::vector<RequestRow> requests;
    std::vector<Transfer> transfers;
    std::vector<PlacementRecord> placements;
    std::vector<AdoptionRecord> adoptions;
    std::vector<StatusRow> status;
    std::vector<ConvergenceRow> convergence;
    std::vector<SessionRow> sessions;
};

struct Audit {
    std::int64_t currency_drift = 0;
    bool replay_exact = true;
    std::uint64_t privacy_rejections = 0;
    std::size_t lost_writes = 0;
    std::int64_t min_floor_slack = 0;
    std::int64_t safety_margin = 0;
    std::uint64_t payment_identity_violations = 0;
    std::int64_t minted = 0;
    std::int64_t burned = 0;
    RunSummary events;
};

struct RunResult {
    ScenarioConfig cfg;
    Logs logs;
    Audit audit;
    nlohmann::json report;
};

/// Executes one scenario. Throws ConfigError / UnknownTarget on bad input.
RunResult run_scenario(const ScenarioConfig& cfg);

/// The metric section of the report, derived from the logs alone.
nlohmann::json compute_metrics(const ScenarioConfig& cfg, const Logs& logs);

/// Post-run invariant audits; each entry describes one violation.
std::vector<std::string> check_invariants(const RunResult& result);

enum class ReportFormat : std::uint8_t { Json, Csv };

/// Canonical JSON (sorted keys) or flattened key,value CSV.
std::string render_report(const nlohmann::json& report, ReportFormat format);
/// Writes the report, the canonical config and every CSV log into `dir`.
void write_outputs(const RunResult& result, const std::filesystem::path& dir, ReportFormat format);

/// Independent runs over seeds [first, first+count) on up to `threads`
/// workers; results come back in seed order.
std::vector<RunResult> run_sweep(const ScenarioConfig& cfg, std::uint64_t first_seed, std::size_t count,
                                 std::size_t threads);

}  // namespace c3
