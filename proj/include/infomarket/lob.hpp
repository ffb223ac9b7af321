#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <set>
#include <stdexcept>

#include "infomarket/csv.hpp"

namespace infomarket {

using TraderId = std::int32_t;

enum class Side { bid, ask };

inline const char* to_string(Side s) { return s == Side::bid ? "bid" : "ask"; }

/// Resting limit order for one share.
struct Order {
    TraderId trader = 0;
    Side side = Side::bid;
    double price = 0.0;
    std::uint64_t seq = 0;  ///< insertion tick; lower executes first at equal price
};

struct Trade {
    std::int64_t step = 0;
    double price = 0.0;  ///< always the resting order's limit price
    TraderId buyer = 0;
    TraderId seller = 0;

    friend bool operator==(const Trade&, const Trade&) = default;
};

namespace detail {
struct BidPriority {
    bool operator()(const Order& a, const Order& b) const {
        if (a.price != b.price) return a.price > b.price;
        return a.seq < b.seq;
    }
};
struct AskPriority {
    bool operator()(const Order& a, const Order& b) const {
        if (a.price != b.price) return a.price < b.price;
        return a.seq < b.seq;
    }
};
}  // namespace detail

/// Two-sided book with price-time priority.
///
/// The book never matches on its own: callers decide whether an incoming
/// order crosses and call take_best(). A locked book (best ask == best bid)
/// is legal.
class Book {
public:
    using BidSet = std::set<Order, detail::BidPriority>;
    using AskSet = std::set<Order, detail::AskPriority>;

    void place_limit(const Order& order) {
        if (!(order.price > 0.0)) throw std::invalid_argument("limit price must be > 0");
        if (order.side == Side::bid) {
            bids_.insert(order);
        } else {
            asks_.insert(order);
        }
        ++placed_;
    }

    [[nodiscard]] std::optional<double> best_bid() const {
        if (bids_.empty()) return std::nullopt;
        return bids_.begin()->price;
    }

    [[nodiscard]] std::optional<double> best_ask() const {
        if (asks_.empty()) return std::nullopt;
        return asks_.begin()->price;
    }

    /// Removes and returns the highest-priority order on `side`.
    std::optional<Order> take_best(Side side) {
        if (side == Side::bid) {
            if (bids_.empty()) return std::nullopt;
            auto o = *bids_.begin();
            bids_.erase(bids_.begin());
            ++executed_;
            return o;
        }
        if (asks_.empty()) return std::nullopt;
        auto o = *asks_.begin();
        asks_.erase(asks_.begin());
        ++executed_;
        return o;
    }

    /// Withdraws every resting order of `trader`; returns how many.
    std::size_t cancel_trader(TraderId trader) {
        const auto n = std::erase_if(bids_, [&](const Order& o) { return o.trader == trader; }) +
                       std::erase_if(asks_, [&](const Order& o) { return o.trader == trader; });
        cancelled_ += n;
        return n;
    }

    void clear() {
        cleared_ += bids_.size() + asks_.size();
        bids_.clear();
        asks_.clear();
    }

    [[nodiscard]] const BidSet& bids() const noexcept { return bids_; }
    [[nodiscard]] const AskSet& asks() const noexcept { return asks_; }
    [[nodiscard]] std::size_t size() const noexcept { return bids_.size() + asks_.size(); }
    [[nodiscard]] bool empty() const noexcept { return size() == 0; }

    /// Lifetime counters: placed - executed - cleared - cancelled == size().
    [[nodiscard]] std::uint64_t placed() const noexcept { return placed_; }
    [[nodiscard]] std::uint64_t executed() const noexcept { return executed_; }
    [[nodiscard]] std::uint64_t cleared() const noexcept { return cleared_; }
    [[nodiscard]] std::uint64_t cancelled() const noexcept { return cancelled_; }

private:
    BidSet bids_;
    AskSet asks_;
    std::uint64_t placed_ = 0;
    std::uint64_t executed_ = 0;
    std::uint64_t cleared_ = 0;
    std::uint64_t cancelled_ = 0;
};

/// Market order from `trader` on `aggressor` side against the best opposite
/// order. Empty opposite side means no fill. Self-trades go through.
inline std::optional<Trade> execute_marketable(Book& book, Side aggressor, TraderId trader,
                                               std::int64_t step = 0) {
    const Side resting = aggressor == Side::bid ? Side::ask : Side::bid;
    auto hit = book.take_best(resting);
    if (!hit) return std::nullopt;
    Trade t;
    t.step = step;
    t.price = hit->price;
    t.buyer = aggressor == Side::bid ? trader : hit->trader;
    t.seller = aggressor == Side::ask ? trader : hit->trader;
    return t;
}

/// Debug snapshot, bids best-first then asks best-first.
inline void write_book_csv(std::ostream& os, const Book& book) {
    os << "side,price,seq\n";
    for (const auto& o : book.bids()) csv::row(os, "bid", o.price, static_cast<unsigned long long>(o.seq));
    for (const auto& o : book.asks()) csv::row(os, "ask", o.price, static_cast<unsigned long long>(o.seq));
}

}  // namespace infomarket
