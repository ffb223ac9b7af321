#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <ostream>
#include <thread>
#include <vector>

#include "infomarket/csv.hpp"
#include "infomarket/engine.hpp"
#include "infomarket/errors.hpp"
#include "infomarket/information.hpp"
#include "infomarket/rng.hpp"

namespace infomarket {

struct BatchConfig {
    int n_sessions = 100;
    int runs_per_session = 100;
    std::uint64_t master_seed = 1;
    int jobs = 1;  ///< worker threads; never changes the result
    SessionConfig session;
    double dividend_d0 = 0.2;
    double dividend_sigma = 0.1;

    void validate() const {
        if (n_sessions < 1 || runs_per_session < 1) throw ConfigError("sessions and runs must be >= 1");
        if (jobs < 1) throw ConfigError("jobs must be >= 1");
        session.validate();
        dividend_params().validate();
    }

    /// Pad is at least kMaxInfoLevel - 1 so a session path does not depend
    /// on which levels happen to be present.
    [[nodiscard]] DividendParams dividend_params() const {
        DividendParams p;
        p.d0 = dividend_d0;
        p.sigma = dividend_sigma;
        p.n_periods = session.n_periods;
        p.horizon_pad = std::max(kMaxInfoLevel - 1, session.required_path_length() - session.n_periods);
        return p;
    }
};

struct RunRecord {
    int session = 0;
    int run = 0;
    std::vector<double> relative_pp;        ///< indexed like SessionConfig::agents
    std::vector<double> period_end_prices;  ///< P_end(1..n_periods)

    friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

struct LevelAggregate {
    int info_level = 0;
    std::size_t count = 0;
    double mean = 0.0;
    double stderr_ = 0.0;  ///< sample standard deviation / sqrt(count)

    friend bool operator==(const LevelAggregate&, const LevelAggregate&) = default;
};

struct BatchResult {
    BatchConfig config;
    std::vector<DividendPath> paths;  ///< one per session
    std::vector<RunRecord> runs;      ///< session-major, run-minor
    std::vector<LevelAggregate> levels;

    /// Relative returns of agent `agent` across all runs, in run order.
    [[nodiscard]] std::vector<double> sample(std::size_t agent) const {
        std::vector<double> out;
        out.reserve(runs.size());
        for (const auto& r : runs) out.push_back(r.relative_pp.at(agent));
        return out;
    }

    /// Agent index holding `level`, or -1.
    [[nodiscard]] int agent_with_level(int level) const {
        const auto& a = config.session.agents;
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (a[i].info_level == level) return static_cast<int>(i);
        }
        return -1;
    }
};

inline RngStream session_stream(std::uint64_t master, int session) {
    return RngStream(master, {static_cast<std::uint64_t>(session)});
}

inline RngStream run_stream(std::uint64_t master, int session, int run) {
    return RngStream(master, {static_cast<std::uint64_t>(session), static_cast<std::uint64_t>(run)});
}

/// Per-agent mean and standard error, in agent order.
inline std::vector<LevelAggregate> aggregate_levels(const SessionConfig& session, const std::vector<RunRecord>& runs) {
    std::vector<LevelAggregate> out;
    for (std::size_t i = 0; i < session.agents.size(); ++i) {
        LevelAggregate a;
        a.info_level = session.agents[i].info_level;
        a.count = runs.size();
        double sum = 0.0;
        for (const auto& r : runs) sum += r.relative_pp.at(i);
        a.mean = runs.empty() ? 0.0 : sum / static_cast<double>(runs.size());
        if (runs.size() > 1) {
            double ss = 0.0;
            for (const auto& r : runs) ss += (r.relative_pp[i] - a.mean) * (r.relative_pp[i] - a.mean);
            a.stderr_ = std::sqrt(ss / static_cast<double>(runs.size() - 1) / static_cast<double>(runs.size()));
        }
        out.push_back(a);
    }
    return out;
}

/// Applies `task(i)` to every i in [0, n) on `jobs` threads. Tasks must
/// write only to their own slot. The first exception is rethrown.
template <class Task>
void parallel_for(std::size_t n, int jobs, Task&& task) {
    const auto workers = static_cast<std::size_t>(std::max(1, jobs));
    if (workers == 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) task(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (;;) {
            const auto i = next.fetch_add(1);
            if (i >= n) return;
            try {
                task(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(n);
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < std::min(workers, n); ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

/// Session s draws its dividend path from stream (master, s); run r of
/// session s trades on stream (master, s, r).
inline BatchResult run_batch(const BatchConfig& config) {
    config.validate();
    BatchResult out;
    out.config = config;
    const auto dp = config.dividend_params();
    out.paths.resize(static_cast<std::size_t>(config.n_sessions));
    parallel_for(out.paths.size(), config.jobs, [&](std::size_t s) {
        auto rng = session_stream(config.master_seed, static_cast<int>(s));
        out.paths[s] = generate_dividend_path(dp, rng);
    });

    const auto runs = static_cast<std::size_t>(config.runs_per_session);
    out.runs.resize(out.paths.size() * runs);
    auto session_cfg = config.session;
    session_cfg.record = false;
    parallel_for(out.runs.size(), config.jobs, [&](std::size_t i) {
        const int s = static_cast<int>(i / runs);
        const int r = static_cast<int>(i % runs);
        Session sess(session_cfg, out.paths[static_cast<std::size_t>(s)], run_stream(config.master_seed, s, r));
        for (int k = 0; k < session_cfg.n_periods; ++k) sess.run_period();
        const double w0 = session_cfg.initial_cash + static_cast<double>(session_cfg.initial_shares) * session_cfg.initial_price;
        std::vector<double> initial(session_cfg.agents.size(), w0);
        std::vector<double> final_w;
        for (std::size_t a = 0; a < initial.size(); ++a) final_w.push_back(sess.marked_wealth(a));
        auto& rec = out.runs[i];
        rec.session = s;
        rec.run = r;
        rec.relative_pp = relative_returns(initial, final_w);
        rec.period_end_prices = sess.period_end_prices();
    });
    out.levels = aggregate_levels(config.session, out.runs);
    return out;
}

inline void write_runs_csv(std::ostream& os, const BatchResult& b) {
    os << "session,run,agent_level,relative_return_pp\n";
    const auto& agents = b.config.session.agents;
    for (const auto& r : b.runs) {
        for (std::size_t i = 0; i < agents.size(); ++i) csv::row(os, r.session, r.run, agents[i].info_level, r.relative_pp[i]);
    }
}

/// Closing price of every period of every run.
inline void write_period_prices_csv(std::ostream& os, const BatchResult& b) {
    os << "session,run,period,close_price\n";
    for (const auto& r : b.runs) {
        for (std::size_t k = 0; k < r.period_end_prices.size(); ++k) {
            csv::row(os, r.session, r.run, static_cast<int>(k + 1), r.period_end_prices[k]);
        }
    }
}

}  // namespace infomarket
