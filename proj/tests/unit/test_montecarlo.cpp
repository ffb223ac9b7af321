#include <gtest/gtest.h>

#include <set>
#include <sstream>
#include <utility>

#include "infomarket/montecarlo.hpp"

using namespace infomarket;

namespace {

BatchConfig small_batch() {
    BatchConfig b;
    b.n_sessions = 4;
    b.runs_per_session = 6;
    b.master_seed = 123;
    b.session.n_periods = 10;
    return b;
}

bool same(const BatchResult& a, const BatchResult& b) {
    return a.paths == b.paths && a.runs == b.runs && a.levels == b.levels;
}

}  // namespace

TEST(Batch, OneByOneEqualsDirectSession) {
    auto b = small_batch();
    b.n_sessions = 1;
    b.runs_per_session = 1;
    const auto r = run_batch(b);
    auto rng = session_stream(b.master_seed, 0);
    const auto path = generate_dividend_path(b.dividend_params(), rng);
    EXPECT_EQ(r.paths.at(0), path);
    const auto direct = run_session(b.session, path, run_stream(b.master_seed, 0, 0));
    EXPECT_EQ(r.runs.at(0).relative_pp, relative_returns(direct));
    EXPECT_EQ(r.runs.at(0).period_end_prices, direct.period_end_prices);
}

TEST(Batch, ResultIndependentOfJobs) {
    auto b = small_batch();
    b.jobs = 1;
    const auto one = run_batch(b);
    for (int jobs : {2, 3, 8}) {
        b.jobs = jobs;
        EXPECT_TRUE(same(one, run_batch(b))) << "jobs " << jobs;
    }
}

TEST(Batch, SeedChangesResult) {
    auto b = small_batch();
    const auto x = run_batch(b);
    b.master_seed += 1;
    EXPECT_FALSE(same(x, run_batch(b)));
}

TEST(Batch, RunsShareTheirSessionPath) {
    auto b = small_batch();
    const auto r = run_batch(b);
    ASSERT_EQ(r.runs.size(), 24u);
    for (std::size_t i = 0; i < r.runs.size(); ++i) {
        EXPECT_EQ(r.runs[i].session, static_cast<int>(i / 6));
        EXPECT_EQ(r.runs[i].run, static_cast<int>(i % 6));
    }
    EXPECT_NE(r.paths[0], r.paths[1]);
}

TEST(Batch, AggregatesRecomputeFromRows) {
    const auto r = run_batch(small_batch());
    for (std::size_t a = 0; a < r.levels.size(); ++a) {
        const auto xs = r.sample(a);
        long double sum = 0;
        for (double x : xs) sum += x;
        const long double mean = sum / xs.size();
        long double ss = 0;
        for (double x : xs) ss += (x - mean) * (x - mean);
        const long double se = std::sqrt(ss / (xs.size() - 1) / xs.size());
        EXPECT_NEAR(r.levels[a].mean, static_cast<double>(mean), 1e-12);
        EXPECT_NEAR(r.levels[a].stderr_, static_cast<double>(se), 1e-12);
        EXPECT_EQ(r.levels[a].count, xs.size());
    }
}

TEST(Seeds, DistinctCoordinatesGiveDistinctStreams) {
    std::set<std::pair<std::uint64_t, std::uint64_t>> seen;
    for (int s = 0; s < 100; ++s) {
        auto ss = session_stream(9, s);
        EXPECT_TRUE(seen.insert({ss.engine()(), ss.engine()()}).second);
        for (int r = 0; r < 100; ++r) {
            auto rs = run_stream(9, s, r);
            EXPECT_TRUE(seen.insert({rs.engine()(), rs.engine()()}).second) << s << "," << r;
        }
    }
    auto a = RngStream(1, {0});
    auto b = RngStream(1, {0, 0});
    auto c = RngStream(1 + (std::uint64_t{1} << 32), {0});
    EXPECT_NE(a.engine()(), b.engine()());
    EXPECT_NE(RngStream(1, {0}).engine()(), c.engine()());
}

TEST(Batch, RunsCsvHasOneRowPerAgentAndRun) {
    const auto r = run_batch(small_batch());
    std::ostringstream os;
    write_runs_csv(os, r);
    const auto text = os.str();
    EXPECT_EQ(text.rfind("session,run,agent_level,relative_return_pp\n", 0), 0u);
    EXPECT_EQ(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')), 1 + 24 * 10u);
}

TEST(Batch, ValidatesConfig) {
    auto b = small_batch();
    b.n_sessions = 0;
    EXPECT_THROW(run_batch(b), ConfigError);
    b = small_batch();
    b.jobs = 0;
    EXPECT_THROW(run_batch(b), ConfigError);
}

TEST(ParallelFor, PropagatesExceptions) {
    EXPECT_THROW(parallel_for(100, 4,
                              [](std::size_t i) {
                                  if (i == 37) throw std::runtime_error("boom");
                              }),
                 std::runtime_error);
}
