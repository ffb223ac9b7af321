#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

#include "infomarket/lob.hpp"
#include "infomarket/rng.hpp"

namespace infomarket {

enum class Strategy { random, fundamentalist, chartist };

inline const char* to_string(Strategy s) {
    switch (s) {
        case Strategy::random: return "random";
        case Strategy::fundamentalist: return "fundamentalist";
        case Strategy::chartist: return "chartist";
    }
    return "?";
}

inline Strategy parse_strategy(std::string_view s) {
    if (s == "random") return Strategy::random;
    if (s == "fundamentalist") return Strategy::fundamentalist;
    if (s == "chartist") return Strategy::chartist;
    throw std::invalid_argument("unknown strategy '" + std::string(s) + "'");
}

struct AgentSpec {
    TraderId id = 0;
    int info_level = 0;  ///< 0 = uninformed; never receives a present value
    Strategy strategy = Strategy::random;

    friend bool operator==(const AgentSpec&, const AgentSpec&) = default;
};

/// What a trader sees when it is activated.
///
/// `price_history` ends at P(time), the price recorded for the most recent
/// completed step; it may be a suffix window of the full series. Inside the
/// period-opening pass a trade can move `last_price` ahead of P(time).
struct MarketView {
    double last_price = 0.0;
    std::optional<double> best_bid;
    std::optional<double> best_ask;
    std::span<const double> price_history;
    std::int64_t time = 0;

    /// P(time - lag).
    [[nodiscard]] double price_back(std::int64_t lag) const {
        if (lag < 0 || static_cast<std::size_t>(lag) >= price_history.size()) {
            throw std::out_of_range("price history too short");
        }
        return price_history[price_history.size() - 1 - static_cast<std::size_t>(lag)];
    }
};

enum class IntentKind { none, market_sell, market_buy, limit_ask, limit_bid };

struct ActionIntent {
    IntentKind kind = IntentKind::none;
    double price = 0.0;  ///< limit price; unused for market and none

    static ActionIntent none() { return {}; }
    static ActionIntent market_sell() { return {IntentKind::market_sell, 0.0}; }
    static ActionIntent market_buy() { return {IntentKind::market_buy, 0.0}; }
    /// Non-positive prices collapse to none.
    static ActionIntent limit_ask(double p) { return p > 0.0 ? ActionIntent{IntentKind::limit_ask, p} : none(); }
    static ActionIntent limit_bid(double p) { return p > 0.0 ? ActionIntent{IntentKind::limit_bid, p} : none(); }

    friend bool operator==(const ActionIntent&, const ActionIntent&) = default;
};

/// Stand-ins for an empty side of the book, so the distance rules stay defined
/// right after the book has been cleared.
struct QuoteDefaults {
    double empty_bid = 0.0;
    double empty_ask_multiple = 2.0;  ///< empty ask := multiple * max(p, value)
};

namespace detail {

/// Shared by fundamentalists and trendless chartists: quote a limit order
/// around `value` on the side whose best quote is nearer.
template <DrawSource Draws>
ActionIntent limit_around(double value, const MarketView& view, Draws& draws, const QuoteDefaults& q) {
    const double bid = view.best_bid.value_or(q.empty_bid);
    const double ask = view.best_ask.value_or(q.empty_ask_multiple * std::max(view.last_price, value));
    const double to_ask = ask - value;
    const double to_bid = value - bid;
    if (to_ask > to_bid) {
        return ActionIntent::limit_ask(value + 0.5 * 0.5 * draws.normal() * (value - bid));
    }
    return ActionIntent::limit_bid(value + 0.5 * 0.5 * draws.normal() * (ask - value));
}

}  // namespace detail

/// Zero-intelligence trader: a coin flip picks the side, then a Gaussian
/// quote of scale 2 around the last price. A quote through the opposite best
/// becomes a market order.
template <DrawSource Draws>
ActionIntent decide_random(const MarketView& view, Draws& draws) {
    const double p = view.last_price;
    if (draws.uniform() < 0.5) {
        const double ask = p + 2.0 * draws.normal();
        if (view.best_bid && ask < *view.best_bid) return ActionIntent::market_sell();
        return ActionIntent::limit_ask(ask);
    }
    const double bid = p + 2.0 * draws.normal();
    if (view.best_ask && bid > *view.best_ask) return ActionIntent::market_buy();
    return ActionIntent::limit_bid(bid);
}

/// Trades on the present value `pv`: hits any bid above it, lifts any ask
/// below it, otherwise quotes around it.
template <DrawSource Draws>
ActionIntent decide_fundamentalist(double pv, const MarketView& view, Draws& draws,
                                   const QuoteDefaults& quotes = {}) {
    const double bid = view.best_bid.value_or(quotes.empty_bid);
    const double ask = view.best_ask.value_or(quotes.empty_ask_multiple * std::max(view.last_price, pv));
    if (pv < bid) return ActionIntent::market_sell();
    if (pv > ask) return ActionIntent::market_buy();
    return detail::limit_around(pv, view, draws, quotes);
}

/// Trend follower. Three strict consecutive moves in one direction trigger
/// an aggressive order one |z| beyond the last price; during the first steps
/// of the session it flips a coin instead. Otherwise it quotes like a
/// fundamentalist valuing the asset at the last price.
///
/// The aggressive orders are returned as limit orders; the engine executes a
/// limit that crosses the opposite best.
template <DrawSource Draws>
ActionIntent decide_chartist(const MarketView& view, Draws& draws, const QuoteDefaults& quotes = {}) {
    const auto t = view.time;
    if (t > 4) {
        const double p0 = view.price_back(0);
        const double p1 = view.price_back(1);
        const double p2 = view.price_back(2);
        const double p3 = view.price_back(3);
        if (p0 < p1 && p1 < p2 && p2 < p3) return ActionIntent::limit_ask(p0 - std::abs(draws.normal()));
        if (p0 > p1 && p1 > p2 && p2 > p3) return ActionIntent::limit_bid(p0 + std::abs(draws.normal()));
    } else if (t < 4) {
        const double p = view.last_price;
        if (draws.uniform() < 0.5) return ActionIntent::limit_ask(p - std::abs(draws.normal()));
        return ActionIntent::limit_bid(p + std::abs(draws.normal()));
    }
    return detail::limit_around(view.last_price, view, draws, quotes);
}

}  // namespace infomarket
