#include "c3/ledger.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "c3/error.hpp"

namespace c3 {

std::string_view to_string(TransferReason reason) noexcept {
    switch (reason) {
        case TransferReason::ServicePayment: return "service-payment";
        case TransferReason::Subsidy: return "subsidy";
        case TransferReason::HostingReward: return "hosting-reward";
    }
    return "?";
}

std::int64_t MarketPrice::cost_micro(const Resources& amount) const {
    std::int64_t total = 0;
    for (auto k : kAllResources) total += amount[k] * micro(k);
    return total;
}

Ledger::Ledger(MarketParams params) : params_(params) {
    if (params_.p_min <= 0 || params_.p_max < params_.p_min) {
        throw Error(ErrorCode::InvalidArgument, "price bounds must satisfy 0 < p_min <= p_max");
    }
    for (auto k : kAllResources) {
        const auto p = std::clamp(params_.initial_price[static_cast<std::size_t>(k)], params_.p_min, params_.p_max);
        prices_.set_micro(k, p * MarketPrice::kScale);
    }
    min_floor_slack_ = std::numeric_limits<std::int64_t>::max();
}

void Ledger::open_account(const NodeId& owner, std::int64_t balance, std::int64_t credit_limit) {
    if (owner.is_issuer()) throw Error(ErrorCode::InvalidArgument, "the issuer identity has no account");
    if (credit_limit < 0) throw Error(ErrorCode::InvalidArgument, "credit limit must be non-negative");
    if (balance < -credit_limit) throw Error(ErrorCode::CreditLimitExceeded, "opening balance below credit floor");
    auto [it, inserted] = accounts_.emplace(owner, Account{owner, balance, credit_limit, 0});
    if (!inserted) throw Error(ErrorCode::InvalidArgument, "account already exists for " + owner.short_hex());
    initial_[owner] = balance;
    initial_total_ += balance;
    min_floor_slack_ = std::min(min_floor_slack_, balance + credit_limit);
}

const Account& Ledger::account(const NodeId& owner) const {
    auto it = accounts_.find(owner);
    if (it == accounts_.end()) throw Error(ErrorCode::UnknownAccount, owner.short_hex());
    return it->second;
}

Account& Ledger::mutable_account(const NodeId& owner) {
    auto it = accounts_.find(owner);
    if (it == accounts_.end()) throw Error(ErrorCode::UnknownAccount, owner.short_hex());
    return it->second;
}

std::int64_t Ledger::spendable(const NodeId& owner) const {
    if (owner.is_issuer()) return std::numeric_limits<std::int64_t>::max();
    const auto& acc = account(owner);
    return acc.balance + acc.credit_limit - acc.held;
}

bool Ledger::reserve(const NodeId& owner, std::int64_t amount) {
    if (amount < 0) throw Error(ErrorCode::InvalidArgument, "negative reservation");
    if (owner.is_issuer() || amount == 0) return true;
    auto& acc = mutable_account(owner);
    if (acc.balance + acc.credit_limit - acc.held < amount) return false;
    acc.held += amount;
    return true;
}

void Ledger::release(const NodeId& owner, std::int64_t amount) {
    if (owner.is_issuer() || amount == 0) return;
    auto& acc = mutable_account(owner);
    acc.held = std::max<std::int64_t>(0, acc.held - amount);
}

void Ledger::check_debit(const Account& acc, std::int64_t amount) const {
    if (acc.balance - acc.held - amount < -acc.credit_limit) {
        throw Error(ErrorCode::CreditLimitExceeded, acc.owner.short_hex() + " cannot pay " + std::to_string(amount));
    }
}

void Ledger::apply_unchecked(const Transfer& t) {
    if (t.from.is_issuer()) {
        minted_ += t.amount;
    } else {
        auto& from = accounts_.at(t.from);
        from.balance -= t.amount;
        min_floor_slack_ = std::min(min_floor_slack_, from.balance + from.credit_limit);
    }
    if (t.to.is_issuer()) {
        burned_ += t.amount;
    } else {
        accounts_.at(t.to).balance += t.amount;
    }
    log_.push_back(t);
}

const Transfer& Ledger::transfer(const Transfer& t) {
    if (t.amount < 0) throw Error(ErrorCode::InvalidArgument, "transfer amount must be non-negative");
    if (!has_account(t.from)) throw Error(ErrorCode::UnknownAccount, t.from.short_hex());
    if (!has_account(t.to)) throw Error(ErrorCode::UnknownAccount, t.to.short_hex());
    if (!t.from.is_issuer()) check_debit(account(t.from), t.amount);
    apply_unchecked(t);
    return log_.back();
}

bool Ledger::apply_atomic(std::span<const Transfer> ops) {
    std::map<NodeId, Account> snapshot;
    for (const auto& t : ops) {
        for (const auto* id : {&t.from, &t.to}) {
            if (id->is_issuer()) continue;
            auto it = accounts_.find(*id);
            if (it == accounts_.end()) return false;
            snapshot.emplace(*id, it->second);
        }
    }
    const auto log_size = log_.size();
    const auto minted = minted_, burned = burned_, slack = min_floor_slack_;
    try {
        for (const auto& t : ops) transfer(t);
    } catch (const Error&) {
        for (auto& [id, acc] : snapshot) accounts_[id] = acc;
        log_.resize(log_size);
        minted_ = minted;
        burned_ = burned;
        min_floor_slack_ = slack;
        return false;
    }
    return true;
}

const MarketPrice& Ledger::update_prices(const Resources& demand, const Resources& supply) {
    const std::int64_t lo = params_.p_min * MarketPrice::kScale;
    const std::int64_t hi = params_.p_max * MarketPrice::kScale;
    for (auto k : kAllResources) {
        if (supply[k] <= 0) {
            prices_.set_micro(k, hi);
            continue;
        }
        const double ratio = static_cast<double>(demand[k]) / static_cast<double>(supply[k]);
        // sqrt is correctly rounded everywhere; pow is not.
        const double factor = params_.alpha == 0.5 ? std::sqrt(ratio) : std::pow(ratio, params_.alpha);
        const double next = std::nearbyint(static_cast<double>(prices_.micro(k)) * factor);
        const std::int64_t clamped =
            next >= static_cast<double>(hi) ? hi : std::max(lo, static_cast<std::int64_t>(next));
        prices_.set_micro(k, clamped);
    }
    return prices_;
}

std::int64_t Ledger::quote(const Resources& amount) const {
    const std::int64_t micro = prices_.cost_micro(amount);
    return (micro + MarketPrice::kScale - 1) / MarketPrice::kScale;
}

Transfer Ledger::settle_hosting_reward(const NodeId& host, const Resources& consumed,
                                       const std::optional<NodeId>& payer, SimTime at) {
    if (!consumed.non_negative()) throw Error(ErrorCode::InvalidArgument, "consumed amounts must be non-negative");
    NodeId source;
    if (params_.minting) {
        source = NodeId::issuer();
    } else {
        if (!payer) throw Error(ErrorCode::InvalidArgument, "zero-sum settlement needs a payer");
        source = *payer;
    }
    return transfer(Transfer{source, host, quote(consumed), TransferReason::HostingReward, at});
}

std::int64_t Ledger::total_balance() const {
    std::int64_t sum = 0;
    for (const auto& [id, acc] : accounts_) sum += acc.balance;
    return sum;
}

std::map<NodeId, std::int64_t> Ledger::balances() const {
    std::map<NodeId, std::int64_t> out;
    for (const auto& [id, acc] : accounts_) out.emplace(id, acc.balance);
    return out;
}

std::map<NodeId, std::int64_t> Ledger::replay(const std::map<NodeId, std::int64_t>& initial,
                                              std::span<const Transfer> log) {
    auto balances = initial;
    for (const auto& t : log) {
        if (!t.from.is_issuer()) balances[t.from] -= t.amount;
        if (!t.to.is_issuer()) balances[t.to] += t.amount;
    }
    return balances;
}

void Ledger::write_csv(std::ostream& out) const {
    out << "at,from,to,amount,reason\n";
    for (const auto& t : log_) {
        out << t.at.ticks << ',' << t.from.hex() << ',' << t.to.hex() << ',' << t.amount << ',' << to_string(t.reason)
            << '\n';
    }
}

}  // namespace c3
