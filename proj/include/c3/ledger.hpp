#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string_view>
#include <vector>

#include "c3/engine.hpp"
#include "c3/node_id.hpp"
#include "c3/resources.hpp"

namespace c3 {

enum class TransferReason : std::uint8_t { ServicePayment, Subsidy, HostingReward };

std::string_view to_string(TransferReason reason) noexcept;

struct Transfer {
    NodeId from;
    NodeId to;
    std::int64_t amount = 0;
    TransferReason reason = TransferReason::ServicePayment;
    SimTime at;

    bool operator==(const Transfer&) const = default;
};

struct Account {
    NodeId owner;
    std::int64_t balance = 0;
    std::int64_t credit_limit = 0;
    /// Funds reserved for in-flight settlements; not spendable by other debits.
    std::int64_t held = 0;
};

/// Per-resource unit prices as rationals with a fixed denominator of 10^6.
class MarketPrice {
public:
    static constexpr std::int64_t kScale = 1'000'000;

    MarketPrice() { micro_.fill(kScale); }

    std::int64_t micro(ResourceKind k) const { return micro_[static_cast<std::size_t>(k)]; }
    void set_micro(ResourceKind k, std::int64_t v) { micro_[static_cast<std::size_t>(k)] = v; }
    double unit_price(ResourceKind k) const { return static_cast<double>(micro(k)) / kScale; }

    /// Exact value of sum(amount * price) in micro-units.
    std::int64_t cost_micro(const Resources& amount) const;

    bool operator==(const MarketPrice&) const = default;

private:
    std::array<std::int64_t, 3> micro_{};
};

struct MarketParams {
    double alpha = 0.5;
    std::int64_t p_min = 1;
    std::int64_t p_max = 1000;
    std::array<std::int64_t, 3> initial_price{10, 10, 10};
    bool minting = false;
};

/// Community-currency accounts, the transfer log, and the demand/supply market.
class Ledger {
public:
    explicit Ledger(MarketParams params = {});

    const MarketParams& params() const noexcept { return params_; }

    void open_account(const NodeId& owner, std::int64_t balance, std::int64_t credit_limit = 0);
    bool has_account(const NodeId& owner) const { return owner.is_issuer() || accounts_.count(owner) > 0; }
    const Account& account(const NodeId& owner) const;
    std::int64_t balance(const NodeId& owner) const { return account(owner).balance; }

    /// Amount that can still be debited without breaching the credit floor.
    std::int64_t spendable(const NodeId& owner) const;
    bool reserve(const NodeId& owner, std::int64_t amount);
    void release(const NodeId& owner, std::int64_t amount);

    /// Applies a single transfer or throws CreditLimitExceeded / UnknownAccount
    /// without touching any state.
    const Transfer& transfer(const Transfer& t);

    /// All-or-nothing application. Returns false (state unchanged) if any
    /// transfer is rejected.
    bool apply_atomic(std::span<const Transfer> ops);

    const MarketPrice& prices() const noexcept { return prices_; }
    const MarketPrice& update_prices(const Resources& demand, const Resources& supply);

    /// ceil(sum(amount * unit price)), rounded up against the payer.
    std::int64_t quote(const Resources& amount) const;

    /// Credits the host with the current-price value of `consumed`. With
    /// minting enabled the reward is issued; otherwise `payer` funds it.
    Transfer settle_hosting_reward(const NodeId& host, const Resources& consumed, const std::optional<NodeId>& payer,
                                   SimTime at);

    std::int64_t total_balance() const;
    std::int64_t initial_total() const noexcept { return initial_total_; }
    std::int64_t minted() const noexcept { return minted_; }
    std::int64_t burned() const noexcept { return burned_; }

    const std::vector<Transfer>& log() const noexcept { return log_; }
    const std::map<NodeId, std::int64_t>& initial_balances() const noexcept { return initial_; }
    std::map<NodeId, std::int64_t> balances() const;

    /// Lowest balance - (-credit_limit) slack seen on any account so far.
    std::int64_t min_floor_slack() const noexcept { return min_floor_slack_; }

    static std::map<NodeId, std::int64_t> replay(const std::map<NodeId, std::int64_t>& initial,
                                                 std::span<const Transfer> log);

    /// CSV with columns at,from,to,amount,reason.
    void write_csv(std::ostream& out) const;

private:
    Account& mutable_account(const NodeId& owner);
    void check_debit(const Account& acc, std::int64_t amount) const;
    void apply_unchecked(const Transfer& t);

    MarketParams params_;
    MarketPrice prices_;
    std::map<NodeId, Account> accounts_;
    std::map<NodeId, std::int64_t> initial_;
    std::vector<Transfer> log_;
    std::int64_t initial_total_ = 0;
    std::int64_t minted_ = 0;
    std::int64_t burned_ = 0;
    std::int64_t min_floor_slack_ = 0;
};

}  // namespace c3
