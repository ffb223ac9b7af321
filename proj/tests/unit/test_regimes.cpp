#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "infomarket/regimes.hpp"

using namespace infomarket;

namespace {
constexpr Strategy F = Strategy::fundamentalist;
constexpr Strategy C = Strategy::chartist;
}  // namespace

TEST(StateCode, ListedCodes) {
    EXPECT_EQ(encode_state(std::vector{F, F, F}), 1);
    EXPECT_EQ(encode_state(std::vector{C, F, F}), 2);
    EXPECT_EQ(encode_state(std::vector{F, C, F}), 3);
    EXPECT_EQ(encode_state(std::vector{C, C, C}), 8);
    EXPECT_EQ(encode_state(std::vector{C, C, C, C, C}), 32);
    EXPECT_EQ(encode_state(std::vector{C, C, F, F, F}), 4);
    EXPECT_EQ(encode_state(std::vector{F, F, C, C, F}), 13);
}

TEST(StateCode, Bijection) {
    for (int n = 1; n <= 10; ++n) {
        for (int code = 1; code <= (1 << n); ++code) {
            const auto p = decode_state(code, n);
            ASSERT_EQ(p.size(), static_cast<std::size_t>(n));
            ASSERT_EQ(encode_state(p), code);
        }
    }
}

TEST(StateCode, Rejects) {
    EXPECT_THROW(decode_state(0, 3), std::invalid_argument);
    EXPECT_THROW(decode_state(9, 3), std::invalid_argument);
    EXPECT_THROW(decode_state(1, 17), std::invalid_argument);
    EXPECT_THROW(encode_state(std::vector{F, Strategy::random}), std::invalid_argument);
    EXPECT_THROW(encode_state(std::vector<Strategy>{}), std::invalid_argument);
}

TEST(Review, OnlyStrictlyBelowMeanFlips) {
    std::vector<Strategy> p{F, F, F};
    EXPECT_TRUE(review_strategies(p, std::vector{-0.1, 0.05, 0.05}));
    EXPECT_EQ(p, (std::vector{C, F, F}));
    EXPECT_FALSE(review_strategies(p, std::vector{0.02, 0.02, 0.02}));
    EXPECT_EQ(p, (std::vector{C, F, F}));
}

TEST(Review, UnderperformingFirstTraderAlternatesOneTwo) {
    std::vector<Strategy> p{F, F, F};
    std::vector<int> codes;
    for (int i = 0; i < 6; ++i) {
        codes.push_back(encode_state(p));
        review_strategies(p, std::vector{-0.01, 0.0, 0.01});
    }
    EXPECT_EQ(codes, (std::vector{1, 2, 1, 2, 1, 2}));
}

TEST(Transitions, AlternatingPair) {
    const auto t = estimate_transition_matrix(std::vector{2, 3, 2, 3, 2}, 8);
    EXPECT_EQ(t.at(2, 3), 1.0);
    EXPECT_EQ(t.at(3, 2), 1.0);
    EXPECT_FALSE(t.visited(1));
    EXPECT_EQ(t.count(2, 3), 2u);
}

TEST(Transitions, VisitedRowsSumToOne) {
    std::vector<int> seq;
    for (int i = 0; i < 500; ++i) seq.push_back(1 + (i * 7 + i / 3) % 8);
    const auto t = estimate_transition_matrix(seq, 8);
    for (int a = 1; a <= 8; ++a) {
        if (!t.visited(a)) continue;
        double s = 0;
        for (int b = 1; b <= 8; ++b) s += t.at(a, b);
        EXPECT_NEAR(s, 1.0, 1e-12);
    }
    EXPECT_THROW(estimate_transition_matrix(std::vector{1}, 8), std::invalid_argument);
}

TEST(Frequencies, SumToOne) {
    const auto pi = state_frequencies(std::vector{1, 2, 2, 4}, 4);
    EXPECT_EQ(pi, (std::vector{0.25, 0.5, 0.0, 0.25}));
}

TEST(Stationarity, DoublyStochasticUniform) {
    std::vector<double> pi(4, 0.25);
    std::vector<double> t{0, 0.5, 0.5, 0, 0.5, 0, 0, 0.5, 0.5, 0, 0, 0.5, 0, 0.5, 0.5, 0};
    const auto g = stationarity_gap(pi, t);
    EXPECT_NEAR(g.linf, 0.0, 1e-15);
    EXPECT_NEAR(g.l1, 0.0, 1e-15);
}

TEST(Stationarity, PointMassWithZeroDiagonalHasGap) {
    std::vector<double> pi{1, 0, 0, 0};
    std::vector<double> t{0, 1, 0, 0, 1, 0, 0, 0, 0, 0, 0, 1, 0, 0, 1, 0};
    const auto g = stationarity_gap(pi, t);
    EXPECT_NEAR(g.linf, 1.0, 1e-15);
    EXPECT_NEAR(g.l1, 2.0, 1e-15);
}

TEST(Switching, SingleTraderNeverSwitches) {
    SwitchingParams p;
    p.n_traders = 1;
    p.n_periods = 50;
    RngStream d(1, {0});
    const auto path = generate_dividend_path(p.dividend_params(), d);
    const auto run = run_switching_sim(p, std::vector{F}, path, RngStream(1, {1}));
    ASSERT_EQ(run.codes.size(), 50u);
    for (int c : run.codes) EXPECT_EQ(c, 1);
    EXPECT_EQ(run.ties, 50u);
}

TEST(Switching, IntervalGroupsPeriods) {
    SwitchingParams p;
    p.n_periods = 95;
    p.interval = 10;
    RngStream d(2, {0});
    const auto path = generate_dividend_path(p.dividend_params(), d);
    const auto run = run_switching_sim(p, std::vector{F, C, F}, path, RngStream(2, {1}));
    EXPECT_EQ(run.codes.size(), 9u);
    EXPECT_EQ(run.codes.front(), 3);
}

// Replays the switching loop by hand on a bare Session.
std::vector<int> manual_codes(const SwitchingParams& p, std::vector<Strategy> profile, const DividendPath& path,
                              RngStream rng) {
    Session s(p.session_config(profile), path, std::move(rng));
    const auto n = profile.size();
    std::vector<double> w0(n), base(n), ret(n);
    for (std::size_t i = 0; i < n; ++i) w0[i] = s.wealth(i);
    std::vector<int> codes;
    for (int k = 0; k < p.n_periods; ++k) {
        codes.push_back(encode_state(profile));
        base = p.basis == SwitchBasis::cumulative ? w0 : std::vector<double>(n);
        if (p.basis == SwitchBasis::interval) {
            for (std::size_t i = 0; i < n; ++i) base[i] = s.wealth(i);
        }
        s.run_period();
        for (std::size_t i = 0; i < n; ++i) ret[i] = s.wealth(i) / base[i] - 1.0;
        review_strategies(profile, ret);
        for (std::size_t i = 0; i < n; ++i) s.set_strategy(i, profile[i]);
    }
    return codes;
}

TEST(Switching, MatchesHandLoopForBothBases) {
    for (auto basis : {SwitchBasis::cumulative, SwitchBasis::interval}) {
        SwitchingParams p;
        p.n_periods = 200;
        p.basis = basis;
        RngStream d(4, {0});
        const auto path = generate_dividend_path(p.dividend_params(), d);
        const auto run = run_switching_sim(p, std::vector{C, F, F}, path, RngStream(4, {1}));
        EXPECT_EQ(run.codes, manual_codes(p, {C, F, F}, path, RngStream(4, {1}))) << to_string(basis);
    }
}

TEST(Switching, BasesAgreeOnFirstReview) {
    SwitchingParams a;
    a.n_periods = 2;
    auto b = a;
    b.basis = SwitchBasis::interval;
    RngStream d(6, {0});
    const auto path = generate_dividend_path(a.dividend_params(), d);
    const auto ra = run_switching_sim(a, std::vector{F, C, F}, path, RngStream(6, {1}));
    const auto rb = run_switching_sim(b, std::vector{F, C, F}, path, RngStream(6, {1}));
    EXPECT_EQ(ra.codes, rb.codes);
}

TEST(Switching, NoSelfOrFullFlipWithoutTies) {
    SwitchingParams p;
    p.n_periods = 1500;
    const auto m = run_markov_experiment(p, 5, 2);
    ASSERT_EQ(m.runs.size(), 8u);
    if (m.ties == 0) {
        EXPECT_EQ(m.diagonal_count, 0u);
    }
    EXPECT_EQ(m.antidiagonal_count, 0u);
    double s = 0;
    for (double x : m.pi_mean) s += x;
    EXPECT_NEAR(s, 1.0, 1e-12);
}

TEST(Switching, FrequenciesAgreeAcrossInitialStates) {
    SwitchingParams p;
    p.n_periods = 4000;
    const auto m = run_markov_experiment(p, 21, 2);
    std::vector<std::vector<double>> pis;
    for (const auto& r : m.runs) pis.push_back(state_frequencies(r.codes, m.n_states));
    for (std::size_t a = 0; a < static_cast<std::size_t>(m.n_states); ++a) {
        const double sd = m.pi_stderr[a] * std::sqrt(static_cast<double>(pis.size()));
        for (std::size_t i = 0; i < pis.size(); ++i) {
            for (std::size_t j = i + 1; j < pis.size(); ++j) {
                EXPECT_LE(std::abs(pis[i][a] - pis[j][a]), 3.0 * std::sqrt(2.0) * sd + 1e-12)
                    << "state " << a + 1 << " runs " << i << "," << j;
            }
        }
    }
}

TEST(Switching, DeterministicAcrossJobs) {
    SwitchingParams p;
    p.n_periods = 300;
    const auto a = run_markov_experiment(p, 3, 1);
    const auto b = run_markov_experiment(p, 3, 4);
    for (std::size_t i = 0; i < a.runs.size(); ++i) EXPECT_EQ(a.runs[i].codes, b.runs[i].codes);
    EXPECT_EQ(a.t_mean, b.t_mean);
    EXPECT_EQ(a.pi_mean, b.pi_mean);
}

TEST(Switching, CsvLayouts) {
    SwitchingParams p;
    p.n_periods = 20;
    const auto m = run_markov_experiment(p, 3, 1);
    std::ostringstream s, t, f;
    write_states_csv(s, m);
    write_tmatrix_csv(t, m);
    write_freqs_csv(f, m);
    EXPECT_EQ(s.str().rfind("run,initial_code,interval,code\n0,1,0,1\n", 0), 0u);
    EXPECT_EQ(t.str().rfind("from,to,prob,stderr,runs\n1,1,", 0), 0u);
    EXPECT_EQ(f.str().rfind("code,pi,pi_stderr,pi_T\n1,", 0), 0u);
}
