#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "infomarket/analytics.hpp"
#include "infomarket/config.hpp"
#include "infomarket/engine.hpp"
#include "infomarket/montecarlo.hpp"
#include "infomarket/regimes.hpp"

namespace fs = std::filesystem;
using namespace infomarket;

namespace {

constexpr const char* kOutEnv = "INFOMARKET_OUT";

struct Flags {
    std::string config;
    std::string preset;
    std::optional<std::uint64_t> seed;
    std::optional<int> sessions, runs, agents, periods, steps, jobs, interval;
    std::optional<std::size_t> max_lag;
    std::string out;
    std::string ticks;
    std::string manifest;
    std::string basis;
    bool no_clearing = false;
    bool per_step = false;
};

std::string preset_listing() {
    std::string s = "Presets:\n";
    for (const auto& p : presets()) {
        s += "  ";
        s += p.name;
        s += " (";
        s += to_string(p.command);
        s += ")\n      ";
        s += p.summary;
        s += "\n";
    }
    s += "\nOutput directory: --out, else $";
    s += kOutEnv;
    s += ", else ./infomarket-out\nExit codes: 0 ok, 2 bad configuration, 3 bad input data, 1 other failure\n";
    return s;
}

fs::path output_dir(const Flags& f) {
    if (!f.out.empty()) return f.out;
    if (const char* env = std::getenv(kOutEnv); env && *env) return env;
    return "infomarket-out";
}

Experiment build_experiment(Command command, const Flags& f) {
    Experiment e;
    e.command = command;
    if (!f.config.empty()) {
        auto j = read_json_file(f.config);
        if (j.is_object() && j.contains("command") && j["command"] != to_string(command)) {
            throw ConfigError("config file is for the '" + j["command"].get<std::string>() + "' command");
        }
        if (!f.preset.empty() && j.is_object()) j.erase("preset");
        if (!f.preset.empty()) apply_preset(e, f.preset);
        apply_json(e, j);
    } else if (!f.preset.empty()) {
        apply_preset(e, f.preset);
    }
    if (f.seed) e.seed = *f.seed;
    if (f.jobs) e.jobs = *f.jobs;
    auto& s = e.batch.session;
    if (command == Command::markov) {
        if (f.agents) e.switching.n_traders = *f.agents;
        if (f.periods) e.switching.n_periods = *f.periods;
        if (f.steps) e.switching.steps_per_period = *f.steps;
        if (f.interval) e.switching.interval = *f.interval;
        if (!f.basis.empty()) e.switching.basis = detail::parse_switch_basis(f.basis);
        if (f.no_clearing) e.switching.clear_book_each_period = false;
    } else {
        if (f.agents) {
            if (*f.agents < 1 || *f.agents > kMaxInfoLevel + 1) throw ConfigError("--agents must be in 1..10");
            s.agents = SessionConfig::default_agents(*f.agents);
        }
        if (f.periods) s.n_periods = *f.periods;
        if (f.steps) s.steps_per_period = *f.steps;
        if (f.no_clearing) s.clear_book_each_period = false;
        if (f.sessions) e.batch.n_sessions = *f.sessions;
        if (f.runs) e.batch.runs_per_session = *f.runs;
    }
    if (f.max_lag) e.max_lag = *f.max_lag;
    if (f.per_step) e.sampling = ReturnSampling::per_step;
    if (!f.ticks.empty()) e.ticks = f.ticks;
    e.batch.jobs = e.jobs;
    e.batch.master_seed = e.seed;
    validate(e);
    return e;
}

class OutputDir {
public:
    explicit OutputDir(fs::path dir) : dir_(std::move(dir)) {
        fs::create_directories(dir_);
        std::ofstream(dir_ / ".incomplete") << "outputs in this directory are partial\n";
    }

    template <class Writer>
    void write(const std::string& name, Writer&& writer) {
        auto os = csv::open_out(dir_ / name);
        writer(os);
        os.flush();
        if (!os) throw DataError("failed writing " + (dir_ / name).string());
        files_.push_back(name);
    }

    /// Writes the manifest and drops the incomplete marker.
    void finish(const Experiment& e) {
        nlohmann::json m;
        m["schema_version"] = kConfigSchemaVersion;
        m["tool"] = "infomarket";
        m["config"] = to_json(e);
        m["outputs"] = files_;
        auto os = csv::open_out(dir_ / "manifest.json");
        os << m.dump(2) << '\n';
        os.flush();
        if (!os) throw DataError("failed writing manifest");
        fs::remove(dir_ / ".incomplete");
    }

    [[nodiscard]] const fs::path& path() const noexcept { return dir_; }

private:
    fs::path dir_;
    std::vector<std::string> files_;
};

void write_series_stats(OutputDir& out, const std::vector<double>& returns, std::size_t max_lag) {
    std::vector<double> absret;
    absret.reserve(returns.size());
    for (double r : returns) absret.push_back(std::abs(r));
    const auto a = acf(returns, max_lag);
    const auto b = acf(absret, max_lag);
    const auto m = moments(returns);
    const auto jb = jarque_bera(m);
    out.write("acf.csv", [&](std::ostream& os) { write_acf_csv(os, a, b); });
    out.write("moments.csv", [&](std::ostream& os) { write_moments_csv(os, m, jb); });
    std::cout << "returns: n=" << m.n << " kurtosis=" << m.kurtosis << " jarque_bera=" << jb.statistic
              << " p=" << jb.p_value << "\n";
}

SessionResult simulate_one(const Experiment& e) {
    auto rng = session_stream(e.seed, 0);
    const auto path = generate_dividend_path(e.batch.dividend_params(), rng);
    return run_session(e.batch.session, path, run_stream(e.seed, 0, 0));
}

void run_simulate(const Experiment& e, OutputDir& out) {
    const auto r = simulate_one(e);
    out.write("trades.csv", [&](std::ostream& os) { write_trades_csv(os, r); });
    out.write("prices.csv", [&](std::ostream& os) { write_prices_csv(os, r); });
    out.write("wealth.csv", [&](std::ostream& os) { write_wealth_csv(os, r); });
    out.write("dividends.csv", [&](std::ostream& os) { write_dividend_csv(os, r.dividends); });
    const auto rel = relative_returns(r);
    out.write("relative_returns.csv", [&](std::ostream& os) {
        os << "agent,info_level,relative_return_pp\n";
        for (std::size_t i = 0; i < rel.size(); ++i) csv::row(os, static_cast<int>(i), r.agents[i].info_level, rel[i]);
    });
    const auto ret = session_log_returns(r, e.sampling);
    if (ret.size() > e.max_lag) {
        try {
            write_series_stats(out, ret, e.max_lag);
        } catch (const DegenerateInput& ex) {
            std::cerr << "note: no return statistics: " << ex.what() << "\n";
        }
    }
    std::cout << "trades: " << r.trades.size() << "\n";
}

void run_batch_cmd(const Experiment& e, OutputDir& out) {
    if (!e.sweep.empty()) {
        const auto rows = tradercount_sweep(e.batch, e.sweep);
        out.write("sweep.csv", [&](std::ostream& os) { write_sweep_csv(os, rows); });
        for (const auto& r : rows) {
            std::cout << "traders=" << r.n_traders << " I0 mean=" << r.uninformed.mean << " pp (se " << r.uninformed.stderr_
                      << ")\n";
        }
        return;
    }
    const auto b = run_batch(e.batch);
    const auto t = jcurve_table(b);
    const auto eff = efficiency_report(b);
    out.write("runs.csv", [&](std::ostream& os) { write_runs_csv(os, b); });
    out.write("jcurve.csv", [&](std::ostream& os) { write_jcurve_csv(os, t); });
    out.write("pvalues.csv", [&](std::ostream& os) { write_pvalues_csv(os, t); });
    out.write("efficiency.csv", [&](std::ostream& os) { write_efficiency_csv(os, eff); });
    out.write("efficiency_summary.csv", [&](std::ostream& os) { write_efficiency_summary_csv(os, eff); });
    for (const auto& r : t.rows) std::cout << "I" << r.info_level << " mean=" << r.mean << " pp (se " << r.stderr_ << ")\n";
    std::cout << "mean net period return=" << eff.mean << " (r_e=" << eff.r_e << ", r_f=" << eff.r_f << ")\n";
}

void run_stats(const Experiment& e, OutputDir& out) {
    std::vector<double> ret;
    if (!e.ticks.empty()) {
        std::ifstream is(e.ticks);
        if (!is) throw DataError("cannot open " + e.ticks);
        const auto ticks = read_ticks_csv(is, e.ticks);
        ret = log_returns(ticks.prices);
    } else {
        ret = session_log_returns(simulate_one(e), e.sampling);
    }
    if (ret.size() <= e.max_lag) throw DataError("series has " + std::to_string(ret.size()) + " returns, need more than max_lag");
    try {
        write_series_stats(out, ret, e.max_lag);
    } catch (const DegenerateInput& ex) {
        throw DataError(ex.what());
    }
}

void run_markov(const Experiment& e, OutputDir& out) {
    const auto m = run_markov_experiment(e.switching, e.seed, e.jobs);
    out.write("states.csv", [&](std::ostream& os) { write_states_csv(os, m); });
    out.write("tmatrix.csv", [&](std::ostream& os) { write_tmatrix_csv(os, m); });
    out.write("freqs.csv", [&](std::ostream& os) { write_freqs_csv(os, m); });
    std::cout << "ties=" << m.ties << " diagonal=" << m.diagonal_count << " antidiagonal=" << m.antidiagonal_count
              << " max|piT-pi|=" << m.gap.linf << "\n";
}

void execute(const Experiment& e, const fs::path& dir) {
    std::cout << "effective config:\n" << to_json(e).dump(2) << "\nmaster seed: " << e.seed << "\n";
    OutputDir out(dir);
    switch (e.command) {
        case Command::simulate: run_simulate(e, out); break;
        case Command::batch: run_batch_cmd(e, out); break;
        case Command::stats: run_stats(e, out); break;
        case Command::markov: run_markov(e, out); break;
    }
    out.finish(e);
    std::cout << "outputs: " << out.path().string() << "\n";
}

void add_common(CLI::App* sub, Flags& f) {
    sub->add_option("--config", f.config, "JSON config file (flags override it)");
    sub->add_option("--preset", f.preset, "named experiment preset");
    sub->add_option("--seed", f.seed, "master seed");
    sub->add_option("--jobs", f.jobs, "worker threads; outputs do not depend on it");
    sub->add_option("--out", f.out, "output directory");
}

void add_market(CLI::App* sub, Flags& f) {
    sub->add_option("--agents", f.agents, "number of traders (default agent set of that size)");
    sub->add_option("--periods", f.periods, "trading periods");
    sub->add_option("--steps", f.steps, "steps per period");
    sub->add_flag("--no-clearing", f.no_clearing, "keep the book across periods");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"infomarket: continuous double auction with heterogeneously informed traders"};
    app.footer(preset_listing());
    app.require_subcommand(1);
    Flags f;

    auto* simulate = app.add_subcommand("simulate", "run one session and write its CSV bundle");
    add_common(simulate, f);
    add_market(simulate, f);
    simulate->add_option("--max-lag", f.max_lag, "largest ACF lag");
    simulate->add_flag("--per-step", f.per_step, "ACF over per-step instead of per-trade returns");

    auto* batch = app.add_subcommand("batch", "Monte Carlo over sessions x runs");
    add_common(batch, f);
    add_market(batch, f);
    batch->add_option("--sessions", f.sessions, "sessions (one dividend path each)");
    batch->add_option("--runs", f.runs, "runs per session");

    auto* stats = app.add_subcommand("stats", "return statistics of an ingested tick CSV or of one simulated session");
    add_common(stats, f);
    add_market(stats, f);
    stats->add_option("--ticks", f.ticks, "CSV with header time,price");
    stats->add_option("--max-lag", f.max_lag, "largest ACF lag");
    stats->add_flag("--per-step", f.per_step, "use per-step instead of per-trade returns for simulated data");

    auto* markov = app.add_subcommand("markov", "strategy-switching runs from every initial profile");
    add_common(markov, f);
    add_market(markov, f);
    markov->add_option("--interval", f.interval, "periods between strategy reviews");
    markov->add_option("--basis", f.basis, "return compared at a review: cumulative (since run start) or interval");

    auto* replay = app.add_subcommand("replay", "re-run the experiment recorded in a manifest");
    replay->add_option("--manifest", f.manifest, "manifest.json of an earlier run")->required();
    replay->add_option("--out", f.out, "output directory (default: <manifest dir>/replay)");
    replay->add_option("--jobs", f.jobs, "worker threads");

    for (auto* sub : {simulate, batch, stats, markov, replay}) sub->footer(preset_listing());

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (replay->parsed()) {
            const auto m = read_json_file(f.manifest);
            if (!m.is_object() || !m.contains("config")) throw ConfigError(f.manifest + " has no config");
            Experiment e;
            e.command = parse_command(m["config"].value("command", std::string{}));
            apply_json(e, m["config"]);
            if (f.jobs) e.jobs = *f.jobs;
            e.batch.jobs = e.jobs;
            e.batch.master_seed = e.seed;
            validate(e);
            const fs::path dir = f.out.empty() ? fs::path(f.manifest).parent_path() / "replay" : fs::path(f.out);
            execute(e, dir);
            return 0;
        }
        Command command = Command::batch;
        if (simulate->parsed()) command = Command::simulate;
        if (stats->parsed()) command = Command::stats;
        if (markov->parsed()) command = Command::markov;
        const auto e = build_experiment(command, f);
        execute(e, output_dir(f));
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
