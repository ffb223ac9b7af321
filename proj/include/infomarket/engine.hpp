#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "infomarket/agents.hpp"
#include "infomarket/csv.hpp"
#include "infomarket/errors.hpp"
#include "infomarket/information.hpp"
#include "infomarket/lob.hpp"
#include "infomarket/rng.hpp"

namespace infomarket {

enum class WealthMark { last_price, fundamental };

/// What happens to a trader's resting orders when it submits a new limit.
/// `replace` keeps at most one live order per trader; `accumulate` lets
/// every decision add another.
enum class OrderPolicy { replace, accumulate };

inline const char* to_string(OrderPolicy p) { return p == OrderPolicy::replace ? "replace" : "accumulate"; }
inline const char* to_string(WealthMark m) { return m == WealthMark::last_price ? "last_price" : "fundamental"; }

struct SessionConfig {
    std::vector<AgentSpec> agents = default_agents(10);
    int n_periods = 30;
    int steps_per_period = 100;
    double initial_cash = 1600.0;
    std::int64_t initial_shares = 40;
    double initial_price = 40.0;
    RateParams rates;
    bool clear_book_each_period = true;
    bool allow_short = false;
    OrderPolicy order_policy = OrderPolicy::replace;
    WealthMark mark = WealthMark::last_price;
    QuoteDefaults quotes;
    /// Keep trades, the full price series and per-period wealth snapshots.
    /// Long switching runs turn this off and keep only a short price window.
    bool record = true;

    /// One trader per level 0..n-1; level 0 random, the rest fundamentalists.
    static std::vector<AgentSpec> default_agents(int n_traders) {
        std::vector<AgentSpec> out;
        for (int j = 0; j < n_traders; ++j) {
            out.push_back({j, j, j == 0 ? Strategy::random : Strategy::fundamentalist});
        }
        return out;
    }

    [[nodiscard]] int max_info_level() const {
        int m = 0;
        for (const auto& a : agents) m = std::max(m, a.info_level);
        return m;
    }

    /// Dividend periods a session reads: the last period's best-informed
    /// lookahead, plus one for fundamental marking.
    [[nodiscard]] int required_path_length() const {
        return n_periods + std::max(max_info_level() - 1, 0) + (mark == WealthMark::fundamental ? 1 : 0);
    }

    void validate() const {
        if (agents.empty()) throw ConfigError("at least one agent is required");
        if (n_periods < 1) throw ConfigError("n_periods must be >= 1");
        if (steps_per_period < 1) throw ConfigError("steps_per_period must be >= 1");
        if (!(initial_cash >= 0.0)) throw ConfigError("initial_cash must be >= 0");
        if (initial_shares < 0) throw ConfigError("initial_shares must be >= 0");
        if (!(initial_price > 0.0)) throw ConfigError("initial_price must be > 0");
        if (!(initial_cash + static_cast<double>(initial_shares) * initial_price > 0.0)) {
            throw ConfigError("initial wealth must be positive");
        }
        rates.validate();
        std::vector<int> seen;
        for (std::size_t i = 0; i < agents.size(); ++i) {
            const auto& a = agents[i];
            if (a.id != static_cast<TraderId>(i)) throw ConfigError("agent ids must be 0..n-1 in order");
            if (a.info_level < 0 || a.info_level > kMaxInfoLevel) throw ConfigError("info level must be in 0..9");
            if (std::find(seen.begin(), seen.end(), a.info_level) != seen.end()) {
                throw ConfigError("one agent per information level");
            }
            seen.push_back(a.info_level);
            if (a.info_level == 0 && a.strategy == Strategy::fundamentalist) {
                throw ConfigError("an uninformed agent cannot be a fundamentalist");
            }
        }
    }
};

struct PortfolioState {
    double cash = 0.0;
    std::int64_t shares = 0;

    [[nodiscard]] double value(double price) const { return cash + static_cast<double>(shares) * price; }

    friend bool operator==(const PortfolioState&, const PortfolioState&) = default;
};

struct WealthSnapshot {
    int period = 0;  ///< 0 = initial endowment
    TraderId agent = 0;
    double cash = 0.0;
    std::int64_t shares = 0;
    double wealth = 0.0;

    friend bool operator==(const WealthSnapshot&, const WealthSnapshot&) = default;
};

struct SessionResult {
    std::vector<AgentSpec> agents;
    double initial_price = 0.0;
    std::vector<double> prices;  ///< last trade price at the end of each step
    std::vector<Trade> trades;
    std::vector<double> period_end_prices;
    std::vector<WealthSnapshot> snapshots;
    std::vector<double> initial_wealth;
    std::vector<double> final_wealth;
    std::vector<PortfolioState> final_portfolios;
    DividendPath dividends;

    friend bool operator==(const SessionResult&, const SessionResult&) = default;
};

/// One market session, steppable period by period.
///
/// Period k: every agent acts once in shuffled order, then each step one
/// uniformly chosen agent acts; at the close cash earns r_f, shares earn
/// D(k), and the book is cleared if configured.
class Session {
public:
    Session(SessionConfig config, DividendPath path, RngStream rng)
        : config_(std::move(config)), path_(std::move(path)), rng_(std::move(rng)) {
        config_.validate();
        if (path_.length() < config_.required_path_length()) {
            throw ConfigError("dividend path has " + std::to_string(path_.length()) + " periods, session needs " +
                              std::to_string(config_.required_path_length()));
        }
        const auto n = config_.agents.size();
        strategies_.resize(n);
        for (std::size_t i = 0; i < n; ++i) strategies_[i] = config_.agents[i].strategy;
        portfolios_.assign(n, PortfolioState{config_.initial_cash, config_.initial_shares});
        reserved_cash_.assign(n, 0.0);
        open_bids_.assign(n, 0);
        open_asks_.assign(n, 0);
        values_.assign(n, 0.0);
        order_.resize(n);
        last_price_ = config_.initial_price;
        prices_.push_back(last_price_);
        if (config_.record) {
            prices_.reserve(static_cast<std::size_t>(config_.n_periods) * config_.steps_per_period + 1);
            for (std::size_t i = 0; i < n; ++i) snapshot(0, i);
        }
    }

    /// Opening pass, all steps, close.
    void run_period() {
        open_period();
        for (int s = 0; s < config_.steps_per_period; ++s) step();
        close_period();
    }

    void open_period() {
        ++period_;
        for (std::size_t i = 0; i < config_.agents.size(); ++i) {
            const int level = config_.agents[i].info_level;
            values_[i] = level >= 1 ? conditional_present_value(path_, level, period_, config_.rates.r_e) : 0.0;
        }
        std::iota(order_.begin(), order_.end(), std::size_t{0});
        std::shuffle(order_.begin(), order_.end(), rng_.engine());
        ++step_;
        for (auto i : order_) act(i);
    }

    /// One activation. The first step of a period shares its slot with the
    /// opening pass, so price series length stays periods * steps.
    void step() {
        if (steps_in_period_ > 0) ++step_;
        act(rng_.index(config_.agents.size()));
        ++steps_in_period_;
        prices_.push_back(last_price_);
    }

    void close_period() {
        const double d = path_.at(period_);
        const double growth = 1.0 + config_.rates.r_f;
        for (auto& pf : portfolios_) {
            pf.cash = pf.cash * growth;
            pf.cash += static_cast<double>(pf.shares) * d;
        }
        period_end_prices_.push_back(last_price_);
        if (config_.record) {
            for (std::size_t i = 0; i < portfolios_.size(); ++i) snapshot(period_, i);
        } else if (prices_.size() > kWindow) {
            prices_.erase(prices_.begin(), prices_.end() - static_cast<std::ptrdiff_t>(kWindow));
        }
        if (config_.clear_book_each_period) clear_book();
        steps_in_period_ = 0;
    }

    void clear_book() {
        book_.clear();
        std::fill(reserved_cash_.begin(), reserved_cash_.end(), 0.0);
        std::fill(open_bids_.begin(), open_bids_.end(), 0);
        std::fill(open_asks_.begin(), open_asks_.end(), 0);
    }

    void set_strategy(std::size_t agent, Strategy s) { strategies_.at(agent) = s; }
    [[nodiscard]] Strategy strategy(std::size_t agent) const { return strategies_.at(agent); }

    [[nodiscard]] double wealth(std::size_t agent) const { return portfolios_.at(agent).value(last_price_); }
    [[nodiscard]] const std::vector<PortfolioState>& portfolios() const noexcept { return portfolios_; }
    [[nodiscard]] const Book& book() const noexcept { return book_; }
    [[nodiscard]] double last_price() const noexcept { return last_price_; }
    [[nodiscard]] int period() const noexcept { return period_; }
    [[nodiscard]] std::int64_t steps_completed() const noexcept { return current_time(); }
    [[nodiscard]] const SessionConfig& config() const noexcept { return config_; }
    [[nodiscard]] const DividendPath& dividends() const noexcept { return path_; }
    [[nodiscard]] const std::vector<Trade>& trades() const noexcept { return trades_; }
    [[nodiscard]] std::uint64_t trade_count() const noexcept { return trade_count_; }
    [[nodiscard]] const std::vector<double>& period_end_prices() const noexcept { return period_end_prices_; }

    [[nodiscard]] double total_cash() const {
        double c = 0.0;
        for (const auto& p : portfolios_) c += p.cash;
        return c;
    }
    [[nodiscard]] std::int64_t total_shares() const {
        std::int64_t s = 0;
        for (const auto& p : portfolios_) s += p.shares;
        return s;
    }

    /// Wealth with the configured mark: last trade price, or the one-period
    /// lookahead value after the final dividend.
    [[nodiscard]] double marked_wealth(std::size_t agent) const {
        if (config_.mark == WealthMark::fundamental) {
            const double v = conditional_present_value(path_, 1, period_ + 1, config_.rates.r_e);
            return portfolios_.at(agent).value(v);
        }
        return wealth(agent);
    }

    /// Packs the recorded state. Requires `record`.
    [[nodiscard]] SessionResult result() const {
        SessionResult r;
        r.agents = config_.agents;
        r.initial_price = config_.initial_price;
        r.prices.assign(prices_.begin() + 1, prices_.end());
        r.trades = trades_;
        r.period_end_prices = period_end_prices_;
        r.snapshots = snapshots_;
        const double w0 = config_.initial_cash + static_cast<double>(config_.initial_shares) * config_.initial_price;
        r.initial_wealth.assign(portfolios_.size(), w0);
        for (std::size_t i = 0; i < portfolios_.size(); ++i) r.final_wealth.push_back(marked_wealth(i));
        r.final_portfolios = portfolios_;
        r.dividends = path_;
        return r;
    }

private:
    static constexpr std::size_t kWindow = 8;

    [[nodiscard]] std::int64_t current_time() const noexcept {
        return static_cast<std::int64_t>(period_ - 1) * config_.steps_per_period + steps_in_period_;
    }

    MarketView view() const {
        MarketView v;
        v.last_price = last_price_;
        v.best_bid = book_.best_bid();
        v.best_ask = book_.best_ask();
        v.price_history = prices_;
        v.time = current_time();
        return v;
    }

    void act(std::size_t agent) {
        const auto v = view();
        ActionIntent intent;
        switch (strategies_[agent]) {
            case Strategy::random: intent = decide_random(v, rng_); break;
            case Strategy::fundamentalist: intent = decide_fundamentalist(values_[agent], v, rng_, config_.quotes); break;
            case Strategy::chartist: intent = decide_chartist(v, rng_, config_.quotes); break;
        }
        route(agent, intent);
    }

    [[nodiscard]] bool can_sell(std::size_t agent) const {
        return config_.allow_short || portfolios_[agent].shares - open_asks_[agent] >= 1;
    }
    [[nodiscard]] bool can_spend(std::size_t agent, double amount) const {
        return config_.allow_short || portfolios_[agent].cash - reserved_cash_[agent] >= amount;
    }

    void route(std::size_t agent, const ActionIntent& intent) {
        const bool is_limit = intent.kind == IntentKind::limit_ask || intent.kind == IntentKind::limit_bid;
        if (is_limit && config_.order_policy == OrderPolicy::replace) withdraw(agent);
        const auto best_bid = book_.best_bid();
        const auto best_ask = book_.best_ask();
        switch (intent.kind) {
            case IntentKind::none: return;
            case IntentKind::market_sell:
                if (best_bid && can_sell(agent)) hit(agent, Side::ask);
                return;
            case IntentKind::market_buy:
                if (best_ask && can_spend(agent, *best_ask)) hit(agent, Side::bid);
                return;
            case IntentKind::limit_ask:
                if (!can_sell(agent)) return;
                if (best_bid && intent.price < *best_bid) {
                    hit(agent, Side::ask);
                } else {
                    book_.place_limit({static_cast<TraderId>(agent), Side::ask, intent.price, next_seq_++});
                    ++open_asks_[agent];
                }
                return;
            case IntentKind::limit_bid:
                if (best_ask && intent.price > *best_ask) {
                    if (can_spend(agent, *best_ask)) hit(agent, Side::bid);
                } else if (can_spend(agent, intent.price)) {
                    book_.place_limit({static_cast<TraderId>(agent), Side::bid, intent.price, next_seq_++});
                    ++open_bids_[agent];
                    reserved_cash_[agent] += intent.price;
                }
                return;
        }
    }

    void withdraw(std::size_t agent) {
        if (open_bids_[agent] + open_asks_[agent] == 0) return;
        book_.cancel_trader(static_cast<TraderId>(agent));
        open_bids_[agent] = 0;
        open_asks_[agent] = 0;
        reserved_cash_[agent] = 0.0;
    }

    void hit(std::size_t agent, Side aggressor) {
        const Side resting_side = aggressor == Side::bid ? Side::ask : Side::bid;
        const auto owner = static_cast<std::size_t>(
            resting_side == Side::bid ? book_.bids().begin()->trader : book_.asks().begin()->trader);
        auto trade = execute_marketable(book_, aggressor, static_cast<TraderId>(agent), step_);
        if (resting_side == Side::bid) {
            --open_bids_[owner];
            reserved_cash_[owner] = open_bids_[owner] == 0 ? 0.0 : reserved_cash_[owner] - trade->price;
        } else {
            --open_asks_[owner];
        }
        auto& buyer = portfolios_[static_cast<std::size_t>(trade->buyer)];
        auto& seller = portfolios_[static_cast<std::size_t>(trade->seller)];
        buyer.cash -= trade->price;
        buyer.shares += 1;
        seller.cash += trade->price;
        seller.shares -= 1;
        last_price_ = trade->price;
        ++trade_count_;
        if (config_.record) trades_.push_back(*trade);
    }

    void snapshot(int period, std::size_t i) {
        const auto& pf = portfolios_[i];
        snapshots_.push_back({period, static_cast<TraderId>(i), pf.cash, pf.shares, pf.value(last_price_)});
    }

    SessionConfig config_;
    DividendPath path_;
    RngStream rng_;
    Book book_;
    std::vector<Strategy> strategies_;
    std::vector<PortfolioState> portfolios_;
    std::vector<double> reserved_cash_;
    std::vector<std::int64_t> open_bids_;
    std::vector<std::int64_t> open_asks_;
    std::vector<double> values_;
    std::vector<std::size_t> order_;
    std::vector<double> prices_;  ///< P(0..time); trimmed to a window when not recording
    std::vector<Trade> trades_;
    std::vector<double> period_end_prices_;
    std::vector<WealthSnapshot> snapshots_;
    double last_price_ = 0.0;
    int period_ = 0;
    int steps_in_period_ = 0;
    std::int64_t step_ = 0;
    std::uint64_t next_seq_ = 0;
    std::uint64_t trade_count_ = 0;
};

/// Runs all configured periods on `path` with stream `rng`.
inline SessionResult run_session(const SessionConfig& config, const DividendPath& path, RngStream rng) {
    auto cfg = config;
    cfg.record = true;
    Session s(std::move(cfg), path, std::move(rng));
    for (int k = 0; k < s.config().n_periods; ++k) s.run_period();
    return s.result();
}

/// Percentage-point excess of each agent's total return over the
/// cross-agent mean. Sums to zero across agents.
inline std::vector<double> relative_returns(std::span<const double> initial_wealth,
                                            std::span<const double> final_wealth) {
    if (initial_wealth.size() != final_wealth.size() || initial_wealth.empty()) {
        throw std::invalid_argument("wealth vectors must be non-empty and equally sized");
    }
    std::vector<double> r(initial_wealth.size());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = (final_wealth[i] - initial_wealth[i]) / initial_wealth[i];
    const double mean = std::accumulate(r.begin(), r.end(), 0.0) / static_cast<double>(r.size());
    for (auto& x : r) x = (x - mean) * 100.0;
    return r;
}

inline std::vector<double> relative_returns(const SessionResult& result) {
    return relative_returns(result.initial_wealth, result.final_wealth);
}

inline void write_trades_csv(std::ostream& os, const SessionResult& r) {
    os << "step,price,buyer,seller\n";
    for (const auto& t : r.trades) csv::row(os, static_cast<long long>(t.step), t.price, t.buyer, t.seller);
}

inline void write_prices_csv(std::ostream& os, const SessionResult& r) {
    os << "step,price\n";
    for (std::size_t i = 0; i < r.prices.size(); ++i) csv::row(os, static_cast<unsigned long long>(i + 1), r.prices[i]);
}

inline void write_wealth_csv(std::ostream& os, const SessionResult& r) {
    os << "agent,period,cash,shares,wealth\n";
    for (const auto& s : r.snapshots) csv::row(os, s.agent, s.period, s.cash, static_cast<long long>(s.shares), s.wealth);
}

/// trades.csv, prices.csv, wealth.csv and dividends.csv into `dir`.
inline void write_session_bundle(const std::filesystem::path& dir, const SessionResult& r) {
    std::filesystem::create_directories(dir);
    auto t = csv::open_out(dir / "trades.csv");
    write_trades_csv(t, r);
    auto p = csv::open_out(dir / "prices.csv");
    write_prices_csv(p, r);
    auto w = csv::open_out(dir / "wealth.csv");
    write_wealth_csv(w, r);
    auto d = csv::open_out(dir / "dividends.csv");
    write_dividend_csv(d, r.dividends);
}

}  // namespace infomarket
