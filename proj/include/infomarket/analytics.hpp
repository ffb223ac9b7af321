#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <numeric>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "infomarket/csv.hpp"
#include "infomarket/engine.hpp"
#include "infomarket/errors.hpp"
#include "infomarket/montecarlo.hpp"

namespace infomarket {

// ---------------------------------------------------------------- Wilcoxon

enum class WilcoxonMethod { exact, normal, degenerate };

struct WilcoxonResult {
    double p_value = 1.0;
    double u = 0.0;  ///< Mann-Whitney U of the first sample
    WilcoxonMethod method = WilcoxonMethod::exact;
};

/// Samples with n + m at or below this size get the exact null
/// distribution (ties included, over the observed mid-ranks).
inline constexpr std::size_t kWilcoxonExactMax = 16;

namespace detail {

/// Doubled mid-ranks of the pooled sample (x first, then y), so tied ranks
/// stay integral. Also returns the tie correction sum of (t^3 - t).
inline std::vector<std::int64_t> doubled_midranks(std::span<const double> x, std::span<const double> y,
                                                  double& tie_term) {
    const std::size_t n = x.size() + y.size();
    std::vector<std::pair<double, std::size_t>> pooled;
    pooled.reserve(n);
    for (std::size_t i = 0; i < x.size(); ++i) pooled.emplace_back(x[i], i);
    for (std::size_t i = 0; i < y.size(); ++i) pooled.emplace_back(y[i], x.size() + i);
    std::sort(pooled.begin(), pooled.end());
    std::vector<std::int64_t> ranks(n);
    tie_term = 0.0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && pooled[j + 1].first == pooled[i].first) ++j;
        // ranks i+1 .. j+1, doubled midrank = (i+1) + (j+1)
        const auto r2 = static_cast<std::int64_t>(i + j + 2);
        for (std::size_t k = i; k <= j; ++k) ranks[pooled[k].second] = r2;
        const double t = static_cast<double>(j - i + 1);
        tie_term += t * t * t - t;
        i = j + 1;
    }
    return ranks;
}

/// Number of size-k subsets of `values` whose sum deviates from `centre` by
/// at least `dev`, over the total number of size-k subsets.
inline double exact_tail(const std::vector<std::int64_t>& values, std::size_t k, std::int64_t centre,
                         std::int64_t dev) {
    const std::int64_t total_sum = std::accumulate(values.begin(), values.end(), std::int64_t{0});
    const auto width = static_cast<std::size_t>(total_sum + 1);
    // ways[c][s]: subsets of size c with sum s among the values seen so far
    std::vector<std::vector<double>> ways(k + 1, std::vector<double>(width, 0.0));
    ways[0][0] = 1.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const auto v = static_cast<std::size_t>(values[i]);
        for (std::size_t c = std::min(k, i + 1); c >= 1; --c) {
            auto& dst = ways[c];
            const auto& src = ways[c - 1];
            for (std::size_t s = width; s-- > v;) dst[s] += src[s - v];
        }
    }
    double hit = 0.0;
    double all = 0.0;
    for (std::size_t s = 0; s < width; ++s) {
        const double w = ways[k][s];
        if (w == 0.0) continue;
        all += w;
        const auto d = static_cast<std::int64_t>(s) - centre;
        if ((d < 0 ? -d : d) >= dev) hit += w;
    }
    return hit / all;
}

}  // namespace detail

/// Two-sided Wilcoxon rank-sum test for equal location.
///
/// p = P(|U - nm/2| >= observed) under the permutation null. Small pooled
/// samples are enumerated exactly; larger ones use the normal
/// approximation with tie and continuity corrections. The statistic is
/// computed on integer doubled rank sums, so p(x, y) == p(y, x) exactly.
inline WilcoxonResult wilcoxon_rank_sum(std::span<const double> x, std::span<const double> y) {
    if (x.empty() || y.empty()) throw std::invalid_argument("wilcoxon_rank_sum needs two non-empty samples");
    for (double v : x) {
        if (std::isnan(v)) throw std::invalid_argument("wilcoxon_rank_sum: NaN in sample");
    }
    for (double v : y) {
        if (std::isnan(v)) throw std::invalid_argument("wilcoxon_rank_sum: NaN in sample");
    }
    const auto n = static_cast<std::int64_t>(x.size());
    const auto m = static_cast<std::int64_t>(y.size());
    const std::int64_t big_n = n + m;
    double tie_term = 0.0;
    const auto ranks = detail::doubled_midranks(x, y, tie_term);
    const std::int64_t w2 = std::accumulate(ranks.begin(), ranks.begin() + n, std::int64_t{0});
    const std::int64_t centre = n * (big_n + 1);  // E[2W]
    const std::int64_t dev2 = w2 > centre ? w2 - centre : centre - w2;

    WilcoxonResult out;
    out.u = static_cast<double>(w2) / 2.0 - static_cast<double>(n * (n + 1)) / 2.0;

    const double nd = static_cast<double>(big_n);
    if (tie_term == nd * nd * nd - nd) {
        out.method = WilcoxonMethod::degenerate;
        out.p_value = 1.0;
        return out;
    }
    if (static_cast<std::size_t>(big_n) <= kWilcoxonExactMax) {
        out.method = WilcoxonMethod::exact;
        // Use the smaller sample as the subset; the tail is the same.
        const auto k = static_cast<std::size_t>(std::min(n, m));
        const std::int64_t c = static_cast<std::int64_t>(k) * (big_n + 1);
        out.p_value = std::min(1.0, detail::exact_tail(ranks, k, c, dev2));
        return out;
    }
    out.method = WilcoxonMethod::normal;
    const double nm = static_cast<double>(n) * static_cast<double>(m);
    const double var = nm / 12.0 * ((nd + 1.0) - tie_term / (nd * (nd - 1.0)));
    const double z = std::max(0.0, static_cast<double>(dev2) / 2.0 - 0.5) / std::sqrt(var);
    out.p_value = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
    return out;
}

// ------------------------------------------------------- series statistics

struct AcfResult {
    std::vector<double> values;  ///< lag 0..max_lag
    double band = 0.0;           ///< 1.96 / sqrt(N)
    std::size_t n = 0;
};

/// Sample autocorrelation with the biased (1/N) normalisation.
inline AcfResult acf(std::span<const double> series, std::size_t max_lag) {
    const std::size_t n = series.size();
    if (n <= max_lag) throw std::invalid_argument("acf: series length must exceed max_lag");
    const double mean = std::accumulate(series.begin(), series.end(), 0.0) / static_cast<double>(n);
    double c0 = 0.0;
    for (double v : series) c0 += (v - mean) * (v - mean);
    if (!(c0 > 0.0)) throw DegenerateInput("acf: series has zero variance");
    AcfResult out;
    out.n = n;
    out.band = 1.96 / std::sqrt(static_cast<double>(n));
    out.values.resize(max_lag + 1);
    for (std::size_t lag = 0; lag <= max_lag; ++lag) {
        double c = 0.0;
        for (std::size_t t = lag; t < n; ++t) c += (series[t] - mean) * (series[t - lag] - mean);
        out.values[lag] = c / c0;
    }
    return out;
}

struct Moments {
    std::size_t n = 0;
    double mean = 0.0;
    double std = 0.0;       ///< population (1/N)
    double skewness = 0.0;
    double kurtosis = 0.0;  ///< Pearson; 3 for a normal
};

inline Moments moments(std::span<const double> series) {
    if (series.size() < 2) throw DegenerateInput("moments: need at least 2 observations");
    Moments m;
    m.n = series.size();
    const double nd = static_cast<double>(m.n);
    m.mean = std::accumulate(series.begin(), series.end(), 0.0) / nd;
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double v : series) {
        const double d = v - m.mean;
        const double d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= nd;
    m3 /= nd;
    m4 /= nd;
    if (!(m2 > 0.0)) throw DegenerateInput("moments: zero variance, skewness and kurtosis undefined");
    m.std = std::sqrt(m2);
    m.skewness = m3 / (m2 * m.std);
    m.kurtosis = m4 / (m2 * m2);
    return m;
}

struct JarqueBera {
    double statistic = 0.0;
    double p_value = 1.0;  ///< chi-square(2) survival: exp(-JB/2)
};

inline JarqueBera jarque_bera(const Moments& m) {
    JarqueBera jb;
    const double k = m.kurtosis - 3.0;
    jb.statistic = static_cast<double>(m.n) * (m.skewness * m.skewness / 6.0 + k * k / 24.0);
    jb.p_value = std::exp(-jb.statistic / 2.0);
    return jb;
}

inline JarqueBera jarque_bera(std::span<const double> series) { return jarque_bera(moments(series)); }

/// log(p[i] / p[i-1]) for consecutive prices.
inline std::vector<double> log_returns(std::span<const double> prices) {
    std::vector<double> out;
    if (prices.size() < 2) return out;
    out.reserve(prices.size() - 1);
    for (std::size_t i = 1; i < prices.size(); ++i) {
        if (!(prices[i] > 0.0) || !(prices[i - 1] > 0.0)) throw DataError("log return of a non-positive price");
        out.push_back(std::log(prices[i] / prices[i - 1]));
    }
    return out;
}

enum class ReturnSampling { per_trade, per_step };

/// Log returns of a session's trade prices (default) or of its per-step
/// last-price series.
inline std::vector<double> session_log_returns(const SessionResult& r, ReturnSampling sampling = ReturnSampling::per_trade) {
    if (sampling == ReturnSampling::per_step) {
        std::vector<double> p;
        p.reserve(r.prices.size() + 1);
        p.push_back(r.initial_price);
        p.insert(p.end(), r.prices.begin(), r.prices.end());
        return log_returns(p);
    }
    std::vector<double> p;
    p.reserve(r.trades.size());
    for (const auto& t : r.trades) p.push_back(t.price);
    return log_returns(p);
}

// ------------------------------------------------------------ tick input

struct TickSeries {
    std::vector<double> times;
    std::vector<double> prices;
};

/// Reads a `time,price` CSV: times strictly increasing, prices positive.
inline TickSeries read_ticks_csv(std::istream& is, const std::string& source = "ticks.csv") {
    TickSeries out;
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(is, line)) throw DataError(source, 1, "empty file");
    ++lineno;
    if (csv::trim(line) != "time,price") throw DataError(source, lineno, "expected header 'time,price'");
    while (std::getline(is, line)) {
        ++lineno;
        if (csv::trim(line).empty()) continue;
        auto cells = csv::split(line);
        if (cells.size() != 2) throw DataError(source, lineno, "expected 2 columns");
        auto t = csv::parse_double(cells[0]);
        auto p = csv::parse_double(cells[1]);
        if (!t || !p || !std::isfinite(*t) || !std::isfinite(*p)) throw DataError(source, lineno, "unparseable row");
        if (!(*p > 0.0)) throw DataError(source, lineno, "price must be positive");
        if (!out.times.empty() && !(*t > out.times.back())) throw DataError(source, lineno, "time must be strictly increasing");
        out.times.push_back(*t);
        out.prices.push_back(*p);
    }
    if (out.prices.size() < 2) throw DataError(source, lineno, "need at least 2 ticks");
    return out;
}

// ------------------------------------------------------------ efficiency

struct EfficiencyReport {
    std::vector<double> returns;  ///< r_A(k) for k = 1 .. n_periods - 1, run after run
    double mean = 0.0;
    double median = 0.0;
    double r_e = 0.0;
    double r_f = 0.0;
};

/// r_A(k) = (P_end(k+1) + D(k+1) - P_end(k)) / P_end(k), appended to `out`.
inline void append_period_returns(std::span<const double> period_end_prices, const DividendPath& path,
                                  std::vector<double>& out) {
    for (std::size_t k = 0; k + 1 < period_end_prices.size(); ++k) {
        const double p0 = period_end_prices[k];
        const double p1 = period_end_prices[k + 1];
        out.push_back((p1 + path.at(static_cast<int>(k) + 2) - p0) / p0);
    }
}

inline EfficiencyReport finish_efficiency(std::vector<double> returns, const RateParams& rates) {
    EfficiencyReport rep;
    rep.r_e = rates.r_e;
    rep.r_f = rates.r_f;
    if (!returns.empty()) {
        rep.mean = std::accumulate(returns.begin(), returns.end(), 0.0) / static_cast<double>(returns.size());
        auto sorted = returns;
        const auto mid = sorted.size() / 2;
        std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(mid), sorted.end());
        rep.median = sorted[mid];
        if (sorted.size() % 2 == 0) {
            const double lower = *std::max_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(mid));
            rep.median = 0.5 * (rep.median + lower);
        }
    }
    rep.returns = std::move(returns);
    return rep;
}

inline EfficiencyReport efficiency_report(const SessionResult& r, const RateParams& rates) {
    std::vector<double> ret;
    append_period_returns(r.period_end_prices, r.dividends, ret);
    return finish_efficiency(std::move(ret), rates);
}

inline EfficiencyReport efficiency_report(const BatchResult& b) {
    std::vector<double> ret;
    for (const auto& run : b.runs) {
        append_period_returns(run.period_end_prices, b.paths.at(static_cast<std::size_t>(run.session)), ret);
    }
    return finish_efficiency(std::move(ret), b.config.session.rates);
}

// ---------------------------------------------------------------- J-curve

struct JCurveTable {
    std::vector<LevelAggregate> rows;      ///< sorted by information level
    std::vector<std::vector<double>> p;    ///< p[a][b] for rows a, b; diagonal 1
};

inline JCurveTable jcurve_table(const BatchResult& b) {
    JCurveTable t;
    std::vector<std::size_t> idx(b.levels.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](auto a, auto c) { return b.levels[a].info_level < b.levels[c].info_level; });
    std::vector<std::vector<double>> samples;
    for (auto i : idx) {
        t.rows.push_back(b.levels[i]);
        samples.push_back(b.sample(i));
    }
    const auto n = idx.size();
    t.p.assign(n, std::vector<double>(n, 1.0));
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t c = a + 1; c < n; ++c) {
            t.p[a][c] = t.p[c][a] = wilcoxon_rank_sum(samples[a], samples[c]).p_value;
        }
    }
    return t;
}

struct SweepRow {
    int n_traders = 0;
    LevelAggregate uninformed;  ///< the level-0 trader
};

/// Repeats `base` with default agent sets of each size in `counts`.
inline std::vector<SweepRow> tradercount_sweep(const BatchConfig& base, const std::vector<int>& counts) {
    std::vector<SweepRow> out;
    for (int n : counts) {
        auto cfg = base;
        cfg.session.agents = SessionConfig::default_agents(n);
        const auto b = run_batch(cfg);
        const int i0 = b.agent_with_level(0);
        if (i0 < 0) throw ConfigError("sweep needs a level-0 trader");
        out.push_back({n, b.levels[static_cast<std::size_t>(i0)]});
    }
    return out;
}

// ---------------------------------------------------------------- writers

inline void write_jcurve_csv(std::ostream& os, const JCurveTable& t) {
    os << "info_level,mean_pp,stderr_pp,n\n";
    for (const auto& r : t.rows) csv::row(os, r.info_level, r.mean, r.stderr_, static_cast<unsigned long long>(r.count));
}

inline void write_pvalues_csv(std::ostream& os, const JCurveTable& t) {
    os << "level_a,level_b,p_value\n";
    for (std::size_t a = 0; a < t.rows.size(); ++a) {
        for (std::size_t c = 0; c < t.rows.size(); ++c) csv::row(os, t.rows[a].info_level, t.rows[c].info_level, t.p[a][c]);
    }
}

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
    os << "n_traders,i0_mean_pp,i0_stderr_pp,n\n";
    for (const auto& r : rows) {
        csv::row(os, r.n_traders, r.uninformed.mean, r.uninformed.stderr_, static_cast<unsigned long long>(r.uninformed.count));
    }
}

inline void write_acf_csv(std::ostream& os, const AcfResult& ret, const AcfResult& absret) {
    if (ret.values.size() != absret.values.size()) throw std::invalid_argument("acf tables differ in length");
    os << "lag,acf_ret,acf_absret,band\n";
    for (std::size_t k = 0; k < ret.values.size(); ++k) {
        csv::row(os, static_cast<unsigned long long>(k), ret.values[k], absret.values[k], ret.band);
    }
}

inline void write_moments_csv(std::ostream& os, const Moments& m, const JarqueBera& jb) {
    os << "n,mean,std,skewness,kurtosis,jarque_bera,jb_p_value\n";
    csv::row(os, static_cast<unsigned long long>(m.n), m.mean, m.std, m.skewness, m.kurtosis, jb.statistic, jb.p_value);
}

inline void write_efficiency_csv(std::ostream& os, const EfficiencyReport& e) {
    os << "index,net_return\n";
    for (std::size_t i = 0; i < e.returns.size(); ++i) csv::row(os, static_cast<unsigned long long>(i), e.returns[i]);
}

inline void write_efficiency_summary_csv(std::ostream& os, const EfficiencyReport& e) {
    os << "n,mean,median,r_e,r_f\n";
    csv::row(os, static_cast<unsigned long long>(e.returns.size()), e.mean, e.median, e.r_e, e.r_f);
}

}  // namespace infomarket
