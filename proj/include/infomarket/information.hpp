#pragma once

#include <cmath>
#include <cstddef>
#include <istream>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "infomarket/csv.hpp"
#include "infomarket/errors.hpp"
#include "infomarket/rng.hpp"

namespace infomarket {

/// Highest information level a trader can hold (I9 sees nine dividends).
inline constexpr int kMaxInfoLevel = 9;

struct DividendParams {
    double d0 = 0.2;         ///< dividend of period 1
    double sigma = 0.1;      ///< scale of each Gaussian step
    int n_periods = 30;
    int horizon_pad = kMaxInfoLevel - 1;  ///< extra periods so lookahead never runs off the end

    void validate() const {
        if (!(sigma >= 0.0)) throw ConfigError("dividend sigma must be >= 0");
        if (!(d0 >= 0.0)) throw ConfigError("initial dividend must be >= 0");
        if (n_periods < 1) throw ConfigError("n_periods must be >= 1");
        if (horizon_pad < 0) throw ConfigError("horizon_pad must be >= 0");
    }

    [[nodiscard]] int length() const { return n_periods + horizon_pad; }
};

struct RateParams {
    double r_f = 0.01;   ///< risk-free rate paid on cash each period
    double r_e = 0.005;  ///< risk-adjusted discount rate used for valuation

    void validate() const {
        if (!(r_e > 0.0)) throw ConfigError("r_e must be > 0");
        if (!(r_f >= 0.0)) throw ConfigError("r_f must be >= 0");
    }
};

/// Dividend sequence indexed from period 1.
class DividendPath {
public:
    DividendPath() = default;

    explicit DividendPath(std::vector<double> values) : values_(std::move(values)) {
        for (double v : values_) {
            if (!(v >= 0.0)) throw ConfigError("dividends must be non-negative");
        }
    }

    /// D(period); period is 1-based.
    [[nodiscard]] double at(int period) const {
        if (period < 1 || static_cast<std::size_t>(period) > values_.size()) {
            throw std::out_of_range("dividend period " + std::to_string(period) +
                                    " outside path of length " + std::to_string(values_.size()));
        }
        return values_[static_cast<std::size_t>(period) - 1];
    }

    [[nodiscard]] int length() const noexcept { return static_cast<int>(values_.size()); }
    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }

    friend bool operator==(const DividendPath&, const DividendPath&) = default;

private:
    std::vector<double> values_;
};

/// Reflected Gaussian random walk: D(1) = d0, D(i) = |D(i-1) + sigma * z_i|.
/// Draws are consumed in index order, one per period after the first.
template <DrawSource Draws>
DividendPath generate_dividend_path(const DividendParams& params, Draws& draws) {
    params.validate();
    std::vector<double> values(static_cast<std::size_t>(params.length()));
    values[0] = params.d0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        values[i] = std::abs(values[i - 1] + params.sigma * draws.normal());
    }
    return DividendPath(std::move(values));
}

/// Present value of the asset for a trader with information level `level`
/// in period `period`: the last visible dividend D(k+j-1) capitalised as a
/// perpetuity, plus the discounted dividends D(k)..D(k+j-2) before it.
///
/// The perpetuity term is divided by r_e (1+r_e)^(j-2) for every j, so j = 1
/// gives D(k)(1+r_e)/r_e. On a constant path every level agrees.
[[nodiscard]] inline double conditional_present_value(const DividendPath& path, int level, int period,
                                                      double r_e) {
    if (level < 1) throw std::invalid_argument("information level must be >= 1");
    if (period < 1) throw std::invalid_argument("period must be >= 1");
    if (!(r_e > 0.0)) throw std::invalid_argument("r_e must be > 0");
    const int last = period + level - 1;
    if (last > path.length()) {
        throw std::out_of_range("present value needs D(" + std::to_string(last) +
                                ") but the path has " + std::to_string(path.length()) + " periods");
    }
    const double growth = 1.0 + r_e;
    double value = path.at(last) / (r_e * std::pow(growth, level - 2));
    double discount = 1.0;
    for (int i = period; i <= last - 1; ++i) {
        value += path.at(i) / discount;
        discount *= growth;
    }
    return value;
}

inline void write_dividend_csv(std::ostream& os, const DividendPath& path) {
    os << "period,dividend\n";
    for (int i = 1; i <= path.length(); ++i) csv::row(os, i, path.at(i));
}

/// Reads a `period,dividend` CSV. Periods must run 1, 2, 3, ...
inline DividendPath read_dividend_csv(std::istream& is, const std::string& source = "dividends.csv") {
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(is, line)) throw DataError(source, 1, "empty file");
    ++lineno;
    if (csv::trim(line) != "period,dividend") throw DataError(source, lineno, "expected header 'period,dividend'");
    std::vector<double> values;
    while (std::getline(is, line)) {
        ++lineno;
        if (csv::trim(line).empty()) continue;
        auto cells = csv::split(line);
        if (cells.size() != 2) throw DataError(source, lineno, "expected 2 columns");
        auto period = csv::parse_int(cells[0]);
        auto value = csv::parse_double(cells[1]);
        if (!period || !value) throw DataError(source, lineno, "unparseable row");
        if (*period != static_cast<long long>(values.size()) + 1) throw DataError(source, lineno, "periods must be consecutive from 1");
        if (!(*value >= 0.0)) throw DataError(source, lineno, "dividend must be non-negative");
        values.push_back(*value);
    }
    if (values.empty()) throw DataError(source, lineno, "no dividend rows");
    return DividendPath(std::move(values));
}

}  // namespace infomarket
