#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "infomarket/lob.hpp"

using namespace infomarket;

TEST(Book, FirstAskSetsBestAsk) {
    Book b;
    b.place_limit({1, Side::ask, 42.0, 0});
    EXPECT_EQ(b.best_ask(), 42.0);
    EXPECT_FALSE(b.best_bid());
}

TEST(Book, PricePriority) {
    Book b;
    b.place_limit({1, Side::ask, 41.0, 0});
    b.place_limit({1, Side::ask, 43.0, 1});
    b.place_limit({1, Side::ask, 42.0, 2});
    EXPECT_EQ(b.best_ask(), 41.0);
}

TEST(Book, TimePriorityAtEqualPrice) {
    Book b;
    b.place_limit({7, Side::ask, 42.0, 5});
    b.place_limit({8, Side::ask, 42.0, 9});
    auto t = execute_marketable(b, Side::bid, 3);
    ASSERT_TRUE(t);
    EXPECT_EQ(t->seller, 7);
    EXPECT_EQ(t->buyer, 3);
    EXPECT_EQ(b.asks().begin()->seq, 9u);
}

TEST(Book, MarketSellHitsBestBidAtRestingPrice) {
    Book b;
    b.place_limit({1, Side::bid, 35.0, 0});
    b.place_limit({2, Side::bid, 33.0, 1});
    auto t = execute_marketable(b, Side::ask, 5, 17);
    ASSERT_TRUE(t);
    EXPECT_EQ(t->price, 35.0);
    EXPECT_EQ(t->step, 17);
    EXPECT_EQ(t->buyer, 1);
    EXPECT_EQ(t->seller, 5);
    EXPECT_EQ(b.best_bid(), 33.0);
}

TEST(Book, BidTieBrokenByTime) {
    Book b;
    b.place_limit({1, Side::bid, 35.0, 2});
    b.place_limit({2, Side::bid, 35.0, 7});
    auto t = execute_marketable(b, Side::ask, 5);
    EXPECT_EQ(t->buyer, 1);
}

TEST(Book, EmptySideIsNoFill) {
    Book b;
    EXPECT_FALSE(execute_marketable(b, Side::ask, 1));
    EXPECT_FALSE(execute_marketable(b, Side::bid, 1));
    EXPECT_EQ(b.executed(), 0u);
}

TEST(Book, SelfTradeExecutes) {
    Book b;
    b.place_limit({4, Side::bid, 30.0, 0});
    auto t = execute_marketable(b, Side::ask, 4);
    ASSERT_TRUE(t);
    EXPECT_EQ(t->buyer, 4);
    EXPECT_EQ(t->seller, 4);
}

TEST(Book, ClearIsIdempotent) {
    Book b;
    b.place_limit({1, Side::bid, 30.0, 0});
    b.place_limit({1, Side::ask, 31.0, 1});
    b.clear();
    EXPECT_TRUE(b.empty());
    b.clear();
    EXPECT_TRUE(b.empty());
    EXPECT_EQ(b.cleared(), 2u);
}

TEST(Book, RejectsNonPositivePrice) {
    Book b;
    EXPECT_THROW(b.place_limit({1, Side::bid, 0.0, 0}), std::invalid_argument);
    EXPECT_THROW(b.place_limit({1, Side::ask, -1.0, 0}), std::invalid_argument);
}

TEST(Book, CancelTraderRemovesOnlyTheirOrders) {
    Book b;
    b.place_limit({1, Side::bid, 30.0, 0});
    b.place_limit({2, Side::bid, 31.0, 1});
    b.place_limit({1, Side::ask, 35.0, 2});
    EXPECT_EQ(b.cancel_trader(1), 2u);
    EXPECT_EQ(b.size(), 1u);
    EXPECT_EQ(b.best_bid(), 31.0);
    EXPECT_EQ(b.cancelled(), 2u);
}

TEST(Book, RandomOperationsKeepOrderingAndCounts) {
    std::mt19937_64 gen(42);
    std::uniform_real_distribution<double> price(1.0, 100.0);
    std::uniform_int_distribution<int> op(0, 9);
    Book b;
    std::uint64_t seq = 0;
    std::vector<double> resting;
    for (int i = 0; i < 20000; ++i) {
        const int o = op(gen);
        if (o < 6) {
            const double p = std::round(price(gen));
            b.place_limit({static_cast<TraderId>(o), o % 2 ? Side::bid : Side::ask, p, seq++});
        } else if (o < 9) {
            const Side aggressor = o == 6 ? Side::bid : Side::ask;
            const auto best = aggressor == Side::bid ? b.best_ask() : b.best_bid();
            auto t = execute_marketable(b, aggressor, 99);
            ASSERT_EQ(t.has_value(), best.has_value());
            if (t) { EXPECT_EQ(t->price, *best); }
        } else if (i % 50 == 0) {
            b.clear();
        } else {
            b.cancel_trader(static_cast<TraderId>(i % 6));
        }
        ASSERT_EQ(b.placed() - b.executed() - b.cleared() - b.cancelled(), b.size());
    }
    double prev = 1e300;
    for (const auto& o : b.bids()) {
        EXPECT_LE(o.price, prev);
        prev = o.price;
    }
    prev = -1.0;
    for (const auto& o : b.asks()) {
        EXPECT_GE(o.price, prev);
        prev = o.price;
    }
}

TEST(Book, CsvSnapshot) {
    Book b;
    b.place_limit({1, Side::bid, 30.5, 3});
    b.place_limit({1, Side::ask, 31.0, 4});
    std::ostringstream os;
    write_book_csv(os, b);
    EXPECT_EQ(os.str(), "side,price,seq\nbid,30.5,3\nask,31,4\n");
}
