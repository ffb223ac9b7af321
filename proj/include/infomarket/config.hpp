#pragma once

#include <cstdint>
#include <fstream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "infomarket/analytics.hpp"
#include "infomarket/engine.hpp"
#include "infomarket/errors.hpp"
#include "infomarket/montecarlo.hpp"
#include "infomarket/regimes.hpp"

namespace infomarket {

inline constexpr int kConfigSchemaVersion = 1;

enum class Command { simulate, batch, stats, markov };

inline const char* to_string(Command c) {
    switch (c) {
        case Command::simulate: return "simulate";
        case Command::batch: return "batch";
        case Command::stats: return "stats";
        case Command::markov: return "markov";
    }
    return "?";
}

inline Command parse_command(std::string_view s) {
    if (s == "simulate") return Command::simulate;
    if (s == "batch") return Command::batch;
    if (s == "stats") return Command::stats;
    if (s == "markov") return Command::markov;
    throw ConfigError("unknown command '" + std::string(s) + "'");
}

/// Everything one CLI invocation needs; also the body of a manifest.
struct Experiment {
    Command command = Command::batch;
    std::string preset;
    std::uint64_t seed = 1;
    int jobs = 1;
    BatchConfig batch;  ///< market parameters for simulate, batch and stats
    std::vector<int> sweep;  ///< trader counts; non-empty turns a batch into a sweep
    SwitchingParams switching;
    std::size_t max_lag = 20;
    ReturnSampling sampling = ReturnSampling::per_trade;
    std::string ticks;  ///< stats input; empty means simulate one session
};

struct Preset {
    const char* name;
    Command command;
    const char* summary;
};

inline const std::vector<Preset>& presets() {
    static const std::vector<Preset> list = {
        {"jcurve10", Command::batch,
         "10 traders (I0 random, I1-I9 fundamentalists), 100 sessions x 100 runs: mean relative return per "
         "information level and pairwise Wilcoxon p-values"},
        {"jcurve3", Command::batch, "the same batch with 3 traders (I0, I1, I2)"},
        {"tradercount_sweep", Command::batch,
         "mean relative return of the uninformed trader in markets of 3, 5, 7, 9 and 10 traders"},
        {"efficiency", Command::batch, "per-period net simple returns of the asset over the default batch and their mean"},
        {"stylized", Command::simulate,
         "one default session: ACF of trade log-returns and of their absolute values, first four moments, Jarque-Bera"},
        {"markov3", Command::markov,
         "3 informed traders switching between fundamentalist and chartist, 100000 periods from each of the 8 initial "
         "profiles: state frequencies, transition matrix, stationarity gap"},
        {"markov5", Command::markov, "the same with 5 informed traders, 600000 periods from each of the 32 initial profiles"},
    };
    return list;
}

inline const Preset& find_preset(std::string_view name) {
    for (const auto& p : presets()) {
        if (name == p.name) return p;
    }
    throw ConfigError("unknown preset '" + std::string(name) + "'");
}

/// Sets the preset's parameters on `e`; `e.command` must match.
inline void apply_preset(Experiment& e, std::string_view name) {
    const auto& p = find_preset(name);
    const bool stats_on_session = e.command == Command::stats && p.command == Command::simulate;
    if (p.command != e.command && !stats_on_session) {
        throw ConfigError("preset '" + std::string(name) + "' belongs to the '" + to_string(p.command) + "' command");
    }
    e.preset = p.name;
    if (name == "jcurve3") e.batch.session.agents = SessionConfig::default_agents(3);
    if (name == "tradercount_sweep") e.sweep = {3, 5, 7, 9, 10};
    if (name == "markov3") {
        e.switching.n_traders = 3;
        e.switching.n_periods = 100000;
    }
    if (name == "markov5") {
        e.switching.n_traders = 5;
        e.switching.n_periods = 600000;
    }
}

// ------------------------------------------------------------------ JSON

namespace detail {

using json = nlohmann::json;

/// Reads keys from one JSON object and rejects the ones nobody asked for.
class ObjectReader {
public:
    ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_ + " must be an object");
    }

    template <class T>
    void get(const char* key, T& out) {
        seen_.insert(key);
        auto it = j_.find(key);
        if (it == j_.end()) return;
        try {
            out = it->template get<T>();
        } catch (const json::exception&) {
            throw ConfigError(path_ + "." + key + " has the wrong type");
        }
    }

    [[nodiscard]] const json* child(const char* key) {
        seen_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    void finish() const {
        for (const auto& [k, v] : j_.items()) {
            if (!seen_.count(k)) throw ConfigError("unknown config key " + path_ + "." + k);
        }
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

inline json agents_to_json(const std::vector<AgentSpec>& agents) {
    json a = json::array();
    for (const auto& s : agents) a.push_back({{"level", s.info_level}, {"strategy", to_string(s.strategy)}});
    return a;
}

inline std::vector<AgentSpec> agents_from_json(const json& a) {
    if (!a.is_array()) throw ConfigError("market.agents must be an array");
    std::vector<AgentSpec> out;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ObjectReader r(a[i], "market.agents[" + std::to_string(i) + "]");
        AgentSpec s;
        s.id = static_cast<TraderId>(i);
        std::string strategy = "fundamentalist";
        r.get("level", s.info_level);
        r.get("strategy", strategy);
        r.finish();
        try {
            s.strategy = parse_strategy(strategy);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
        out.push_back(s);
    }
    return out;
}

inline SwitchBasis parse_switch_basis(const std::string& s) {
    if (s == "cumulative") return SwitchBasis::cumulative;
    if (s == "interval") return SwitchBasis::interval;
    throw ConfigError("basis must be 'cumulative' or 'interval'");
}

inline OrderPolicy parse_order_policy(const std::string& s) {
    if (s == "replace") return OrderPolicy::replace;
    if (s == "accumulate") return OrderPolicy::accumulate;
    throw ConfigError("order_policy must be 'replace' or 'accumulate'");
}

inline WealthMark parse_mark(const std::string& s) {
    if (s == "last_price") return WealthMark::last_price;
    if (s == "fundamental") return WealthMark::fundamental;
    throw ConfigError("mark must be 'last_price' or 'fundamental'");
}

}  // namespace detail

inline nlohmann::json to_json(const Experiment& e) {
    using json = nlohmann::json;
    const auto& s = e.batch.session;
    const auto& w = e.switching;
    json j;
    j["schema_version"] = kConfigSchemaVersion;
    j["command"] = to_string(e.command);
    j["preset"] = e.preset;
    j["seed"] = e.seed;
    j["jobs"] = e.jobs;
    j["market"] = {
        {"agents", detail::agents_to_json(s.agents)},
        {"periods", s.n_periods},
        {"steps", s.steps_per_period},
        {"initial_cash", s.initial_cash},
        {"initial_shares", s.initial_shares},
        {"initial_price", s.initial_price},
        {"r_f", s.rates.r_f},
        {"r_e", s.rates.r_e},
        {"clear_book", s.clear_book_each_period},
        {"allow_short", s.allow_short},
        {"order_policy", to_string(s.order_policy)},
        {"mark", to_string(s.mark)},
        {"empty_bid", s.quotes.empty_bid},
        {"empty_ask_multiple", s.quotes.empty_ask_multiple},
        {"dividend_d0", e.batch.dividend_d0},
        {"dividend_sigma", e.batch.dividend_sigma},
    };
    j["batch"] = {{"sessions", e.batch.n_sessions}, {"runs", e.batch.runs_per_session}, {"sweep", e.sweep}};
    j["switching"] = {
        {"traders", w.n_traders},
        {"periods", w.n_periods},
        {"interval", w.interval},
        {"steps", w.steps_per_period},
        {"initial_cash", w.initial_cash},
        {"initial_shares", w.initial_shares},
        {"initial_price", w.initial_price},
        {"r_f", w.rates.r_f},
        {"r_e", w.rates.r_e},
        {"clear_book", w.clear_book_each_period},
        {"order_policy", to_string(w.order_policy)},
        {"basis", to_string(w.basis)},
        {"dividend_d0", w.dividend_d0},
        {"dividend_sigma", w.dividend_sigma},
    };
    j["stats"] = {{"max_lag", e.max_lag},
                  {"sampling", e.sampling == ReturnSampling::per_trade ? "per_trade" : "per_step"},
                  {"ticks", e.ticks}};
    return j;
}

/// Overlays `j` on `e`. Missing keys keep their current values; unknown
/// keys and a wrong schema version are ConfigErrors. A "preset" key is
/// applied before the other keys.
inline void apply_json(Experiment& e, const nlohmann::json& j) {
    detail::ObjectReader top(j, "config");
    int version = kConfigSchemaVersion;
    top.get("schema_version", version);
    if (version != kConfigSchemaVersion) {
        throw ConfigError("config schema_version " + std::to_string(version) + " is not supported (expected " +
                          std::to_string(kConfigSchemaVersion) + ")");
    }
    std::string command = to_string(e.command);
    top.get("command", command);
    e.command = parse_command(command);
    std::string preset;
    top.get("preset", preset);
    if (!preset.empty()) apply_preset(e, preset);
    top.get("seed", e.seed);
    top.get("jobs", e.jobs);

    if (const auto* m = top.child("market")) {
        auto& s = e.batch.session;
        detail::ObjectReader r(*m, "config.market");
        if (const auto* a = r.child("agents")) s.agents = detail::agents_from_json(*a);
        r.get("periods", s.n_periods);
        r.get("steps", s.steps_per_period);
        r.get("initial_cash", s.initial_cash);
        r.get("initial_shares", s.initial_shares);
        r.get("initial_price", s.initial_price);
        r.get("r_f", s.rates.r_f);
        r.get("r_e", s.rates.r_e);
        r.get("clear_book", s.clear_book_each_period);
        r.get("allow_short", s.allow_short);
        std::string policy = to_string(s.order_policy);
        r.get("order_policy", policy);
        s.order_policy = detail::parse_order_policy(policy);
        std::string mark = to_string(s.mark);
        r.get("mark", mark);
        s.mark = detail::parse_mark(mark);
        r.get("empty_bid", s.quotes.empty_bid);
        r.get("empty_ask_multiple", s.quotes.empty_ask_multiple);
        r.get("dividend_d0", e.batch.dividend_d0);
        r.get("dividend_sigma", e.batch.dividend_sigma);
        r.finish();
    }
    if (const auto* b = top.child("batch")) {
        detail::ObjectReader r(*b, "config.batch");
        r.get("sessions", e.batch.n_sessions);
        r.get("runs", e.batch.runs_per_session);
        r.get("sweep", e.sweep);
        r.finish();
    }
    if (const auto* sw = top.child("switching")) {
        auto& w = e.switching;
        detail::ObjectReader r(*sw, "config.switching");
        r.get("traders", w.n_traders);
        r.get("periods", w.n_periods);
        r.get("interval", w.interval);
        r.get("steps", w.steps_per_period);
        r.get("initial_cash", w.initial_cash);
        r.get("initial_shares", w.initial_shares);
        r.get("initial_price", w.initial_price);
        r.get("r_f", w.rates.r_f);
        r.get("r_e", w.rates.r_e);
        r.get("clear_book", w.clear_book_each_period);
        std::string policy = to_string(w.order_policy);
        r.get("order_policy", policy);
        w.order_policy = detail::parse_order_policy(policy);
        std::string basis = to_string(w.basis);
        r.get("basis", basis);
        w.basis = detail::parse_switch_basis(basis);
        r.get("dividend_d0", w.dividend_d0);
        r.get("dividend_sigma", w.dividend_sigma);
        r.finish();
    }
    if (const auto* st = top.child("stats")) {
        detail::ObjectReader r(*st, "config.stats");
        r.get("max_lag", e.max_lag);
        std::string sampling = e.sampling == ReturnSampling::per_trade ? "per_trade" : "per_step";
        r.get("sampling", sampling);
        if (sampling == "per_trade") {
            e.sampling = ReturnSampling::per_trade;
        } else if (sampling == "per_step") {
            e.sampling = ReturnSampling::per_step;
        } else {
            throw ConfigError("stats.sampling must be 'per_trade' or 'per_step'");
        }
        r.get("ticks", e.ticks);
        r.finish();
    }
    top.finish();
}

inline nlohmann::json read_json_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open " + path);
    try {
        return nlohmann::json::parse(is);
    } catch (const nlohmann::json::exception& ex) {
        throw ConfigError(path + ": " + ex.what());
    }
}

/// Cross-field checks; throws ConfigError.
inline void validate(const Experiment& e) {
    if (e.jobs < 1) throw ConfigError("jobs must be >= 1");
    switch (e.command) {
        case Command::simulate:
        case Command::batch: e.batch.validate(); break;
        case Command::stats:
            if (e.ticks.empty()) e.batch.validate();
            break;
        case Command::markov: e.switching.validate(); break;
    }
    for (int n : e.sweep) {
        if (n < 1 || n > kMaxInfoLevel + 1) throw ConfigError("sweep trader counts must be in 1..10");
    }
    if (e.max_lag < 1) throw ConfigError("max_lag must be >= 1");
}

}  // namespace infomarket
