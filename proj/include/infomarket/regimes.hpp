#pragma once

#include <cmath>
#include <cstdint>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

#include "infomarket/csv.hpp"
#include "infomarket/engine.hpp"
#include "infomarket/errors.hpp"
#include "infomarket/information.hpp"
#include "infomarket/montecarlo.hpp"
#include "infomarket/rng.hpp"

namespace infomarket {

inline constexpr int kMaxSwitchingTraders = 16;

/// What a trader's return is measured over at a review: since the start of
/// the run, or over the interval just finished.
enum class SwitchBasis { cumulative, interval };

inline const char* to_string(SwitchBasis b) { return b == SwitchBasis::cumulative ? "cumulative" : "interval"; }

/// Profile of traders I1..In (index 0 is I1) to its code: 1 + sum of
/// 2^(i-1) over chartists. All fundamentalists is 1, all chartists 2^n.
inline int encode_state(std::span<const Strategy> profile) {
    if (profile.empty() || profile.size() > static_cast<std::size_t>(kMaxSwitchingTraders)) {
        throw std::invalid_argument("state profiles cover 1..16 traders");
    }
    int code = 1;
    for (std::size_t i = 0; i < profile.size(); ++i) {
        if (profile[i] == Strategy::chartist) {
            code += 1 << i;
        } else if (profile[i] != Strategy::fundamentalist) {
            throw std::invalid_argument("state profiles hold only fundamentalists and chartists");
        }
    }
    return code;
}

inline std::vector<Strategy> decode_state(int code, int n_traders) {
    if (n_traders < 1 || n_traders > kMaxSwitchingTraders) throw std::invalid_argument("state profiles cover 1..16 traders");
    if (code < 1 || code > (1 << n_traders)) throw std::invalid_argument("state code out of range");
    std::vector<Strategy> out(static_cast<std::size_t>(n_traders));
    const int bits = code - 1;
    for (int i = 0; i < n_traders; ++i) out[static_cast<std::size_t>(i)] = (bits >> i) & 1 ? Strategy::chartist : Strategy::fundamentalist;
    return out;
}

/// Long-run market of informed traders I1..In that swap strategy after
/// underperforming. Defaults are the small-market parameters.
struct SwitchingParams {
    int n_traders = 3;
    int n_periods = 20000;
    int interval = 1;  ///< periods between strategy reviews
    int steps_per_period = 100;
    double dividend_d0 = 0.2;
    double dividend_sigma = 0.01;
    RateParams rates{0.001, 0.005};
    double initial_cash = 1600.0;
    std::int64_t initial_shares = 40;
    double initial_price = 40.0;
    bool clear_book_each_period = true;
    OrderPolicy order_policy = OrderPolicy::replace;
    SwitchBasis basis = SwitchBasis::cumulative;

    void validate() const {
        if (n_traders < 1 || n_traders > kMaxSwitchingTraders) throw ConfigError("switching runs take 1..16 traders");
        if (n_traders > kMaxInfoLevel) throw ConfigError("switching runs take at most 9 informed traders");
        if (n_periods < 1) throw ConfigError("n_periods must be >= 1");
        if (interval < 1) throw ConfigError("interval must be >= 1");
        rates.validate();
    }

    [[nodiscard]] DividendParams dividend_params() const {
        DividendParams p;
        p.d0 = dividend_d0;
        p.sigma = dividend_sigma;
        p.n_periods = n_periods;
        p.horizon_pad = kMaxInfoLevel;
        return p;
    }

    [[nodiscard]] SessionConfig session_config(std::span<const Strategy> initial) const {
        SessionConfig c;
        c.agents.clear();
        for (int i = 0; i < n_traders; ++i) c.agents.push_back({i, i + 1, initial[static_cast<std::size_t>(i)]});
        c.n_periods = n_periods;
        c.steps_per_period = steps_per_period;
        c.initial_cash = initial_cash;
        c.initial_shares = initial_shares;
        c.initial_price = initial_price;
        c.rates = rates;
        c.clear_book_each_period = clear_book_each_period;
        c.order_policy = order_policy;
        c.record = false;
        return c;
    }
};

struct SwitchingRun {
    int initial_code = 0;
    std::vector<int> codes;  ///< profile in force during each interval
    std::size_t ties = 0;    ///< reviews where nobody was strictly below the mean
};

/// Flips every trader whose return is strictly below the cross-trader mean.
/// Returns false when nobody flips (all returns tie at the mean).
inline bool review_strategies(std::span<Strategy> profile, std::span<const double> returns) {
    if (profile.size() != returns.size() || profile.empty()) throw std::invalid_argument("profile and returns differ in size");
    double mean = 0.0;
    for (double r : returns) mean += r;
    mean /= static_cast<double>(returns.size());
    bool any = false;
    for (std::size_t i = 0; i < profile.size(); ++i) {
        if (returns[i] < mean) {
            profile[i] = profile[i] == Strategy::chartist ? Strategy::fundamentalist : Strategy::chartist;
            any = true;
        }
    }
    return any;
}

/// Runs the market for whole intervals; any trailing partial interval is
/// not traded. After each interval every trader whose wealth return is
/// strictly below the cross-trader mean swaps strategy. The return runs
/// from the start of the run or of the interval, per `params.basis`.
inline SwitchingRun run_switching_sim(const SwitchingParams& params, std::span<const Strategy> initial,
                                      const DividendPath& path, RngStream rng) {
    params.validate();
    if (initial.size() != static_cast<std::size_t>(params.n_traders)) throw ConfigError("initial profile size must equal n_traders");
    Session s(params.session_config(initial), path, std::move(rng));
    const auto n = static_cast<std::size_t>(params.n_traders);
    std::vector<Strategy> profile(initial.begin(), initial.end());
    SwitchingRun out;
    out.initial_code = encode_state(profile);
    const int reviews = params.n_periods / params.interval;
    out.codes.reserve(static_cast<std::size_t>(reviews));
    std::vector<double> start(n), ret(n);
    for (std::size_t i = 0; i < n; ++i) start[i] = s.wealth(i);
    for (int r = 0; r < reviews; ++r) {
        out.codes.push_back(encode_state(profile));
        if (params.basis == SwitchBasis::interval) {
            for (std::size_t i = 0; i < n; ++i) start[i] = s.wealth(i);
        }
        for (int k = 0; k < params.interval; ++k) s.run_period();
        for (std::size_t i = 0; i < n; ++i) ret[i] = (s.wealth(i) - start[i]) / start[i];
        if (!review_strategies(profile, ret)) ++out.ties;
        for (std::size_t i = 0; i < n; ++i) s.set_strategy(i, profile[i]);
    }
    return out;
}

struct TransitionMatrix {
    int n_states = 0;
    std::vector<std::uint64_t> counts;  ///< row-major, from x to
    std::vector<std::uint64_t> row_totals;
    std::vector<double> prob;  ///< row-normalised; unvisited rows stay 0

    [[nodiscard]] bool visited(int from_code) const { return row_totals.at(static_cast<std::size_t>(from_code - 1)) > 0; }
    [[nodiscard]] double at(int from_code, int to_code) const {
        return prob.at(static_cast<std::size_t>(from_code - 1) * static_cast<std::size_t>(n_states) +
                       static_cast<std::size_t>(to_code - 1));
    }
    [[nodiscard]] std::uint64_t count(int from_code, int to_code) const {
        return counts.at(static_cast<std::size_t>(from_code - 1) * static_cast<std::size_t>(n_states) +
                         static_cast<std::size_t>(to_code - 1));
    }
};

inline TransitionMatrix estimate_transition_matrix(std::span<const int> codes, int n_states) {
    if (codes.size() < 2) throw std::invalid_argument("transition estimate needs at least 2 states");
    if (n_states < 1) throw std::invalid_argument("n_states must be >= 1");
    TransitionMatrix t;
    t.n_states = n_states;
    const auto ns = static_cast<std::size_t>(n_states);
    t.counts.assign(ns * ns, 0);
    t.row_totals.assign(ns, 0);
    t.prob.assign(ns * ns, 0.0);
    for (std::size_t i = 0; i + 1 < codes.size(); ++i) {
        const int a = codes[i];
        const int b = codes[i + 1];
        if (a < 1 || a > n_states || b < 1 || b > n_states) throw std::invalid_argument("state code out of range");
        ++t.counts[static_cast<std::size_t>(a - 1) * ns + static_cast<std::size_t>(b - 1)];
        ++t.row_totals[static_cast<std::size_t>(a - 1)];
    }
    for (std::size_t a = 0; a < ns; ++a) {
        if (t.row_totals[a] == 0) continue;
        for (std::size_t b = 0; b < ns; ++b) {
            t.prob[a * ns + b] = static_cast<double>(t.counts[a * ns + b]) / static_cast<double>(t.row_totals[a]);
        }
    }
    return t;
}

/// Share of the sequence spent in each state, index code - 1.
inline std::vector<double> state_frequencies(std::span<const int> codes, int n_states) {
    if (codes.empty()) throw std::invalid_argument("empty state sequence");
    std::vector<double> pi(static_cast<std::size_t>(n_states), 0.0);
    for (int c : codes) {
        if (c < 1 || c > n_states) throw std::invalid_argument("state code out of range");
        pi[static_cast<std::size_t>(c - 1)] += 1.0;
    }
    for (auto& p : pi) p /= static_cast<double>(codes.size());
    return pi;
}

struct StationarityGap {
    std::vector<double> pi_t;
    double linf = 0.0;
    double l1 = 0.0;
};

inline StationarityGap stationarity_gap(std::span<const double> pi, std::span<const double> t_row_major) {
    const std::size_t n = pi.size();
    if (t_row_major.size() != n * n) throw std::invalid_argument("T must be |pi| x |pi|");
    StationarityGap g;
    g.pi_t.assign(n, 0.0);
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = 0; b < n; ++b) g.pi_t[b] += pi[a] * t_row_major[a * n + b];
    }
    for (std::size_t b = 0; b < n; ++b) {
        const double d = std::abs(g.pi_t[b] - pi[b]);
        g.linf = std::max(g.linf, d);
        g.l1 += d;
    }
    return g;
}

/// Averages over independent runs. A transition cell averages only the
/// runs that visited its row; stderr is the sample sd over sqrt(count).
struct MarkovSummary {
    int n_traders = 0;
    int n_states = 0;
    std::vector<SwitchingRun> runs;
    std::vector<TransitionMatrix> matrices;
    std::vector<double> t_mean, t_stderr;
    std::vector<std::uint64_t> t_support;  ///< runs visiting each row
    std::vector<double> pi_mean, pi_stderr;
    std::uint64_t diagonal_count = 0;
    std::uint64_t antidiagonal_count = 0;
    std::uint64_t ties = 0;
    StationarityGap gap;
};

namespace detail {
inline void mean_and_stderr(const std::vector<double>& xs, double& mean, double& se) {
    mean = 0.0;
    se = 0.0;
    if (xs.empty()) return;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    if (xs.size() < 2) return;
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    se = std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
}
}  // namespace detail

inline MarkovSummary summarize_switching(int n_traders, std::vector<SwitchingRun> runs) {
    MarkovSummary m;
    m.n_traders = n_traders;
    m.n_states = 1 << n_traders;
    const auto ns = static_cast<std::size_t>(m.n_states);
    std::vector<std::vector<double>> pis;
    for (const auto& r : runs) {
        m.matrices.push_back(estimate_transition_matrix(r.codes, m.n_states));
        pis.push_back(state_frequencies(r.codes, m.n_states));
        m.ties += r.ties;
    }
    m.t_mean.assign(ns * ns, 0.0);
    m.t_stderr.assign(ns * ns, 0.0);
    m.t_support.assign(ns, 0);
    for (std::size_t a = 0; a < ns; ++a) {
        for (const auto& t : m.matrices) m.t_support[a] += t.row_totals[a] > 0 ? 1 : 0;
        for (std::size_t b = 0; b < ns; ++b) {
            std::vector<double> xs;
            for (const auto& t : m.matrices) {
                if (t.row_totals[a] > 0) xs.push_back(t.prob[a * ns + b]);
                if (a == b) m.diagonal_count += t.counts[a * ns + b];
                if (a + b == ns - 1) m.antidiagonal_count += t.counts[a * ns + b];
            }
            detail::mean_and_stderr(xs, m.t_mean[a * ns + b], m.t_stderr[a * ns + b]);
        }
    }
    m.pi_mean.assign(ns, 0.0);
    m.pi_stderr.assign(ns, 0.0);
    for (std::size_t a = 0; a < ns; ++a) {
        std::vector<double> xs;
        for (const auto& p : pis) xs.push_back(p[a]);
        detail::mean_and_stderr(xs, m.pi_mean[a], m.pi_stderr[a]);
    }
    m.gap = stationarity_gap(m.pi_mean, m.t_mean);
    m.runs = std::move(runs);
    return m;
}

/// One run from every initial profile 1..2^n. Run i uses dividend stream
/// (master, i, 0) and trading stream (master, i, 1).
inline MarkovSummary run_markov_experiment(const SwitchingParams& params, std::uint64_t master_seed, int jobs = 1) {
    params.validate();
    const int n_states = 1 << params.n_traders;
    std::vector<SwitchingRun> runs(static_cast<std::size_t>(n_states));
    parallel_for(runs.size(), jobs, [&](std::size_t i) {
        RngStream div(master_seed, {i, 0});
        const auto path = generate_dividend_path(params.dividend_params(), div);
        const auto profile = decode_state(static_cast<int>(i) + 1, params.n_traders);
        runs[i] = run_switching_sim(params, profile, path, RngStream(master_seed, {i, 1}));
    });
    return summarize_switching(params.n_traders, std::move(runs));
}

inline void write_states_csv(std::ostream& os, const MarkovSummary& m) {
    os << "run,initial_code,interval,code\n";
    for (std::size_t r = 0; r < m.runs.size(); ++r) {
        const auto& run = m.runs[r];
        for (std::size_t i = 0; i < run.codes.size(); ++i) {
            csv::row(os, static_cast<unsigned long long>(r), run.initial_code, static_cast<unsigned long long>(i), run.codes[i]);
        }
    }
}

inline void write_tmatrix_csv(std::ostream& os, const MarkovSummary& m) {
    os << "from,to,prob,stderr,runs\n";
    const auto ns = static_cast<std::size_t>(m.n_states);
    for (std::size_t a = 0; a < ns; ++a) {
        for (std::size_t b = 0; b < ns; ++b) {
            csv::row(os, static_cast<int>(a + 1), static_cast<int>(b + 1), m.t_mean[a * ns + b], m.t_stderr[a * ns + b],
                     static_cast<unsigned long long>(m.t_support[a]));
        }
    }
}

inline void write_freqs_csv(std::ostream& os, const MarkovSummary& m) {
    os << "code,pi,pi_stderr,pi_T\n";
    for (std::size_t a = 0; a < m.pi_mean.size(); ++a) {
        csv::row(os, static_cast<int>(a + 1), m.pi_mean[a], m.pi_stderr[a], m.gap.pi_t[a]);
    }
}

}  // namespace infomarket
