#include "mcsim/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "mcsim/billiards.hpp"
#include "mcsim/circuitnet.hpp"
#include "mcsim/deposition.hpp"
#include "mcsim/io.hpp"
#include "mcsim/ising.hpp"
#include "mcsim/parallel.hpp"
#include "mcsim/random.hpp"
#include "mcsim/telecom.hpp"
#include "mcsim/verify.hpp"

namespace mcsim::cli {
namespace {

// Configuration problem detected after flag parsing; the message already
// aggregates every missing parameter and conflict found.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// The only wall-clock read in the whole program: the metrics CSV's
// wall_clock_seconds row, which the determinism checks exclude.
struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

// Effective-config echo: `key=value` lines in declaration order.  Re-parsing
// the emitted file through --config reproduces the same effective config.
struct Echo {
    std::vector<std::pair<std::string, std::string>> kv;

    void put(const std::string& k, const std::string& v) { kv.emplace_back(k, v); }
    void put(const std::string& k, double v) { kv.emplace_back(k, format_double(v)); }
    void put(const std::string& k, int v) { kv.emplace_back(k, std::to_string(v)); }
    void put(const std::string& k, std::uint64_t v) { kv.emplace_back(k, std::to_string(v)); }

    std::string text() const {
        std::string out;
        for (const auto& [k, v] : kv) {
            out += k;
            out += '=';
            out += v;
            out += '\n';
        }
        return out;
    }
};

struct Metrics {
    CsvTable table{{"metric", "value"}};

    template <class V>
    void put(const std::string& name, V value) {
        table.begin_row().cell(name).cell(value);
    }
};

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

// Raise one aggregated error covering everything wrong with the invocation.
void raise_problems(const std::string& sub, const std::vector<std::string>& missing,
                    const std::vector<std::string>& conflicts) {
    if (missing.empty() && conflicts.empty()) return;
    std::string msg = sub + ":";
    if (!missing.empty()) msg += " missing required parameters: " + join(missing, ", ");
    if (!missing.empty() && !conflicts.empty()) msg += ";";
    if (!conflicts.empty()) msg += " " + join(conflicts, "; ");
    throw ConfigError(msg);
}

void setup_common(CLI::App& app) {
    app.allow_config_extras(CLI::config_extras_mode::error);
    app.set_config("--config", "",
                   "flat key=value file; command-line flags override file values");
}

// CLI11 consumes argument vectors back to front.
void parse_app(CLI::App& app, std::vector<std::string> args) {
    std::reverse(args.begin(), args.end());
    app.parse(args);
}

std::filesystem::path prepare_out(const std::string& out) {
    std::filesystem::path dir(out);
    std::filesystem::create_directories(dir);
    return dir;
}

void write_echo(const std::filesystem::path& dir, const Echo& echo) {
    write_text_file((dir / "effective_config.txt").string(), echo.text());
}

void write_metrics(const std::filesystem::path& dir, Metrics& metrics, const Timer& timer) {
    metrics.put("wall_clock_seconds", timer.seconds());
    metrics.table.write_file((dir / "metrics.csv").string());
}

std::vector<double> parse_double_list(const std::string& text, const std::string& flag) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ConfigError(flag + ": '" + item + "' is not a number");
        }
    }
    if (out.empty()) throw ConfigError(flag + ": empty list");
    return out;
}

// ---------------------------------------------------------------------------
// billiards
// ---------------------------------------------------------------------------

int cmd_billiards(const std::vector<std::string>& rest) {
    CLI::App app{"hard balls in a one-dimensional gutter", "mcsim billiards"};
    setup_common(app);

    std::string scheduler, out = "mcsim_out";
    int n = 0;
    double d = 0, d0 = 0, growth = 0, x_left = 0, x_right = 0, horizon = 0, dt = 0;
    std::uint64_t seed = 1;

    auto* o_sched = app.add_option("--scheduler,--engine", scheduler,
                                   "event scheduling: timedriven, lazy or anticipatory")
                        ->check(CLI::IsMember({"timedriven", "lazy", "anticipatory"}));
    auto* o_n = app.add_option("--n", n, "ball count")->check(CLI::PositiveNumber);
    auto* o_d = app.add_option("--d", d, "fixed ball diameter")->check(CLI::PositiveNumber);
    auto* o_d0 = app.add_option("--d0", d0, "ball diameter at time zero")
                     ->check(CLI::PositiveNumber);
    auto* o_growth = app.add_option("--growth", growth, "diameter growth rate (swelling mode)")
                         ->check(CLI::NonNegativeNumber);
    app.add_option("--x-left", x_left, "left wall position")->capture_default_str();
    auto* o_xr = app.add_option("--x-right", x_right, "right wall position (default: n)");
    app.add_option("--seed", seed, "random seed")->capture_default_str();
    auto* o_horizon = app.add_option("--horizon", horizon, "simulated time to run")
                          ->check(CLI::PositiveNumber);
    auto* o_dt = app.add_option("--dt", dt, "fixed step size (timedriven only)")
                     ->check(CLI::PositiveNumber);
    app.add_option("--out", out, "output directory")->capture_default_str();

    try {
        parse_app(app, rest);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    std::vector<std::string> missing, conflicts;
    if (!o_sched->count()) missing.push_back("--scheduler");
    if (!o_n->count()) missing.push_back("--n");
    if (!o_horizon->count()) missing.push_back("--horizon");
    if (!o_d->count() && !o_d0->count()) missing.push_back("--d or --d0 (ball diameter)");
    if (scheduler == "timedriven" && !o_dt->count()) missing.push_back("--dt");
    if (o_d->count() && (o_d0->count() || o_growth->count()))
        conflicts.push_back("--d fixes the diameter; it conflicts with --d0/--growth");
    if (o_growth->count() && !o_d0->count())
        conflicts.push_back("--growth needs --d0 (the diameter the growth starts from)");
    if (!scheduler.empty() && scheduler != "timedriven" && o_dt->count())
        conflicts.push_back("--dt conflicts with the " + scheduler +
                            " scheduler: event-driven runs advance event to event, so "
                            "there is no fixed step (use --scheduler timedriven)");
    raise_problems("billiards", missing, conflicts);

    billiards::GutterConfig cfg;
    cfg.n = n;
    cfg.x_left = x_left;
    cfg.x_right = o_xr->count() ? x_right : x_left + static_cast<double>(n);
    cfg.d0 = o_d->count() ? d : d0;
    cfg.growth = growth;
    if (!(cfg.x_right > cfg.x_left))
        throw ConfigError("billiards: --x-right must exceed --x-left");

    Echo echo;
    echo.put("scheduler", scheduler);
    echo.put("n", n);
    echo.put("d0", cfg.d0);
    echo.put("growth", cfg.growth);
    echo.put("x-left", cfg.x_left);
    echo.put("x-right", cfg.x_right);
    echo.put("seed", seed);
    echo.put("horizon", horizon);
    if (scheduler == "timedriven") echo.put("dt", dt);

    auto dir = prepare_out(out);
    write_echo(dir, echo);

    Timer timer;
    auto init = billiards::random_initial(cfg, seed);
    billiards::RunResult run;
    if (scheduler == "timedriven")
        run = billiards::run_timedriven(cfg, init, dt, horizon);
    else if (scheduler == "lazy")
        run = billiards::run_lazy(cfg, init, horizon);
    else
        run = billiards::run_anticipatory(cfg, init, horizon);

    CsvTable events({"time", "subject", "event_kind"});
    for (const auto& e : run.events)
        events.begin_row().cell(e.time).cell(e.subject).cell(
            billiards::event_kind_name(e.kind));
    events.write_file((dir / "events.csv").string());

    CsvTable final_state({"ball", "x", "v"});
    for (int i = 0; i < cfg.n; ++i) {
        const auto& b = run.final_balls[static_cast<std::size_t>(i)];
        final_state.begin_row().cell(i).cell(b.x).cell(b.v);
    }
    final_state.write_file((dir / "final_state.csv").string());

    Metrics metrics;
    metrics.put("events_committed", static_cast<std::uint64_t>(run.events.size()));
    metrics.put("collisions", run.collision_count);
    metrics.put("advancements", run.advancement_count);
    metrics.put("jammed", run.jammed ? 1 : 0);
    if (run.jammed) metrics.put("jam_time", run.jam_time);
    metrics.put("stop_time", run.stop_time);
    write_metrics(dir, metrics, timer);
    return 0;
}

// ---------------------------------------------------------------------------
// deposition
// ---------------------------------------------------------------------------

int cmd_deposition(const std::vector<std::string>& rest) {
    CLI::App app{"ballistic deposition on a periodic substrate", "mcsim deposition"};
    setup_common(app);

    std::string engine = "sequential", out = "mcsim_out";
    double length = 0, horizon = 0;
    int sectors = 0, workers = 1, height_bins = 20, time_bins = 10;
    std::uint64_t particles = 0, seed = 1;

    auto* o_length = app.add_option("--length", length, "substrate circumference")
                         ->check(CLI::PositiveNumber);
    auto* o_sectors = app.add_option("--sectors", sectors, "equal sectors (length/sectors >= 1)")
                          ->check(CLI::PositiveNumber);
    auto* o_particles = app.add_option("--particles", particles,
                                       "deposit exactly this many disks (sequential engine)");
    auto* o_horizon = app.add_option("--horizon", horizon,
                                     "run the Poisson arrival stream to this time")
                          ->check(CLI::PositiveNumber);
    app.add_option("--engine", engine, "sequential, cautious or lockstep-emulation")
        ->check(CLI::IsMember({"sequential", "cautious", "lockstep-emulation"}))
        ->capture_default_str();
    app.add_option("--workers", workers, "threads for the cautious engine")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app.add_option("--height-bins", height_bins, "density profile height bins")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app.add_option("--time-bins", time_bins, "density profile time bins")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app.add_option("--seed", seed, "random seed")->capture_default_str();
    app.add_option("--out", out, "output directory")->capture_default_str();

    try {
        parse_app(app, rest);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    std::vector<std::string> missing, conflicts;
    if (!o_length->count()) missing.push_back("--length");
    if (!o_sectors->count()) missing.push_back("--sectors");
    if (!o_particles->count() && !o_horizon->count())
        missing.push_back("exactly one of --particles or --horizon");
    if (o_particles->count() && o_horizon->count())
        conflicts.push_back("--particles and --horizon are mutually exclusive");
    if (engine != "sequential" && o_particles->count())
        conflicts.push_back("--particles conflicts with the " + engine +
                            " engine: the parallel engines run continuous-time arrival "
                            "streams, so give --horizon instead");
    if (engine != "cautious" && workers > 1)
        conflicts.push_back("--workers applies to the cautious engine only");
    raise_problems("deposition", missing, conflicts);

    deposition::DepositionConfig cfg;
    cfg.length = length;
    cfg.sectors = sectors;

    Echo echo;
    echo.put("length", length);
    echo.put("sectors", sectors);
    echo.put("engine", engine);
    if (o_particles->count()) echo.put("particles", particles);
    if (o_horizon->count()) echo.put("horizon", horizon);
    echo.put("workers", workers);
    echo.put("height-bins", height_bins);
    echo.put("time-bins", time_bins);
    echo.put("seed", seed);

    auto dir = prepare_out(out);
    write_echo(dir, echo);

    Timer timer;
    deposition::Trajectory traj;
    Metrics metrics;
    if (engine == "sequential") {
        auto stream = RandomStream::keyed(seed, 0xD390);
        traj = o_particles->count() ? deposition::deposit_sequential(cfg, particles, stream)
                                    : deposition::deposit_sequential_ct(cfg, horizon, stream);
    } else {
        parallel::DepositionRing model(cfg, seed);
        parallel::CautiousResult res;
        if (engine == "cautious") {
            res = parallel::cautious_run(model, horizon, workers, seed);
        } else {
            res = parallel::lockstep_emulate(model, horizon, seed);
            metrics.put("cycles", res.cycles);
            double frac = 0;
            for (double f : res.nonwaiting) frac += f;
            if (!res.nonwaiting.empty()) frac /= static_cast<double>(res.nonwaiting.size());
            metrics.put("mean_nonwaiting_fraction", frac);
        }
        traj = model.merged(res);
    }

    CsvTable rows({"m", "x", "z"});
    double max_z = 0;
    for (const auto& p : traj.particles) {
        rows.begin_row().cell(p.m).cell(p.x).cell(p.z);
        max_z = std::max(max_z, p.z);
    }
    rows.write_file((dir / "particles.csv").string());

    auto profile = deposition::density_profile(traj, static_cast<std::size_t>(height_bins),
                                               static_cast<std::size_t>(time_bins));
    CsvTable density({"height_bin", "time_bin", "density"});
    for (std::size_t h = 0; h < profile.height_bins; ++h)
        for (std::size_t t = 0; t < profile.time_bins; ++t)
            density.begin_row()
                .cell(static_cast<std::uint64_t>(h))
                .cell(static_cast<std::uint64_t>(t))
                .cell(profile.density[h * profile.time_bins + t]);
    density.write_file((dir / "density.csv").string());

    auto geometry = deposition::verify_geometry(traj, sectors);
    metrics.put("particles", static_cast<std::uint64_t>(traj.particles.size()));
    metrics.put("max_height", max_z);
    metrics.put("overlap_violations", geometry.overlap_violations);
    metrics.put("support_violations", geometry.support_violations);
    write_metrics(dir, metrics, timer);
    return 0;
}

// ---------------------------------------------------------------------------
// ising
// ---------------------------------------------------------------------------

int cmd_ising(const std::vector<std::string>& rest) {
    CLI::App app{"kinetic Ising model on a periodic square lattice", "mcsim ising"};
    setup_common(app);

    std::string variant = "tree", out = "mcsim_out";
    int side = 0;
    double temperature = 0, field = 0, rate_scale = 1, horizon = 0;
    std::uint64_t updates = 0, seed = 1;

    auto* o_side = app.add_option("--side", side, "lattice side length (side x side spins)")
                       ->check(CLI::Range(2, 1 << 14));
    auto* o_temp = app.add_option("--temperature", temperature, "temperature (> 0)")
                       ->check(CLI::PositiveNumber);
    app.add_option("--field", field, "external field")->capture_default_str();
    app.add_option("--rate-scale", rate_scale, "attempt-rate scale (> 0)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app.add_option("--variant,--engine", variant,
                   "tree or class (continuous-time) or uniformized (discrete polls)")
        ->check(CLI::IsMember({"tree", "class", "uniformized"}))
        ->capture_default_str();
    auto* o_horizon = app.add_option("--horizon", horizon,
                                     "simulated time (tree/class variants)")
                          ->check(CLI::PositiveNumber);
    auto* o_updates = app.add_option("--updates", updates,
                                     "update attempts (uniformized variant)");
    app.add_option("--seed", seed, "random seed")->capture_default_str();
    app.add_option("--out", out, "output directory")->capture_default_str();

    try {
        parse_app(app, rest);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    std::vector<std::string> missing, conflicts;
    if (!o_side->count()) missing.push_back("--side");
    if (!o_temp->count()) missing.push_back("--temperature");
    if (variant == "uniformized") {
        if (!o_updates->count()) missing.push_back("--updates");
        if (o_horizon->count())
            conflicts.push_back("--horizon conflicts with the uniformized variant, which "
                                "runs a fixed number of update attempts (--updates)");
    } else {
        if (!o_horizon->count()) missing.push_back("--horizon");
        if (o_updates->count())
            conflicts.push_back("--updates conflicts with the " + variant +
                                " variant, which runs in continuous time (--horizon)");
    }
    raise_problems("ising", missing, conflicts);

    ising::Params params;
    params.temperature = temperature;
    params.field = field;
    params.rate_scale = rate_scale;

    Echo echo;
    echo.put("side", side);
    echo.put("temperature", temperature);
    echo.put("field", field);
    echo.put("rate-scale", rate_scale);
    echo.put("variant", variant);
    if (variant == "uniformized")
        echo.put("updates", updates);
    else
        echo.put("horizon", horizon);
    echo.put("seed", seed);

    auto dir = prepare_out(out);
    write_echo(dir, echo);

    Timer timer;
    ising::SpinLattice start(side);
    auto stream = RandomStream::keyed(seed, 0x1516);
    ising::Trajectory traj;
    if (variant == "uniformized")
        traj = ising::run_uniformized(start, params, updates, stream);
    else
        traj = ising::run_dispenser_kmc(start, params, horizon, stream,
                                        variant == "tree" ? ising::Variant::Tree
                                                          : ising::Variant::Class);

    auto trace = ising::magnetization_trace(start, traj);
    CsvTable series({"time", "magnetization"});
    series.begin_row().cell(0.0).cell(trace[0]);
    for (std::size_t i = 0; i < traj.flips.size(); ++i)
        series.begin_row().cell(traj.flips[i].time).cell(trace[i + 1]);
    series.write_file((dir / "magnetization.csv").string());

    std::string grid;
    for (int r = 0; r < side; ++r) {
        for (int c = 0; c < side; ++c) {
            if (c) grid += ',';
            grid += std::to_string(
                static_cast<int>(traj.final_spins[static_cast<std::size_t>(r * side + c)]));
        }
        grid += '\n';
    }
    write_text_file((dir / "final_grid.csv").string(), grid);

    Metrics metrics;
    metrics.put("flips", static_cast<std::uint64_t>(traj.flips.size()));
    metrics.put("final_magnetization", trace.back());
    metrics.put("final_time", traj.final_time);
    if (variant == "uniformized") {
        metrics.put("polls", traj.polls);
        metrics.put("accepted", traj.accepted);
    } else {
        metrics.put("delegation_selects", traj.counters.selects);
        metrics.put("delegation_select_visits", traj.counters.select_visits);
        metrics.put("rate_updates", traj.counters.updates);
    }
    write_metrics(dir, metrics, timer);
    return 0;
}

// ---------------------------------------------------------------------------
// telecom
// ---------------------------------------------------------------------------

int cmd_telecom(const std::vector<std::string>& rest) {
    CLI::App app{"two-provider market of switching telephone customers", "mcsim telecom"};
    setup_common(app);

    std::string engine = "event", delegation = "tree", graph_file, out = "mcsim_out";
    int customers = 0;
    double avg_degree = 4.0, vol_lo = 1.0, vol_hi = 5.0;
    double p1_same = 0.05, p1_other = 0.15, p2_same = 0.10, p2_other = 0.10;
    double alpha = 1.0, dt = 0, horizon = 0;
    std::uint64_t seed = 1;

    auto* o_customers = app.add_option("--customers", customers, "customer count")
                            ->check(CLI::PositiveNumber);
    auto* o_degree = app.add_option("--avg-degree", avg_degree,
                                    "average directed call-volume entries per customer")
                         ->check(CLI::NonNegativeNumber)
                         ->capture_default_str();
    auto* o_graph = app.add_option("--graph-file", graph_file,
                                   "caller,callee,minutes CSV instead of a random graph")
                        ->check(CLI::ExistingFile);
    auto* o_vlo = app.add_option("--vol-lo", vol_lo, "minimum random volume")
                      ->capture_default_str();
    auto* o_vhi = app.add_option("--vol-hi", vol_hi, "maximum random volume")
                      ->capture_default_str();
    app.add_option("--p1-same", p1_same, "provider 1 in-network price")->capture_default_str();
    app.add_option("--p1-other", p1_other, "provider 1 out-of-network price")
        ->capture_default_str();
    app.add_option("--p2-same", p2_same, "provider 2 in-network price")->capture_default_str();
    app.add_option("--p2-other", p2_other, "provider 2 out-of-network price")
        ->capture_default_str();
    app.add_option("--alpha", alpha, "switch attempts per (time x bill gap)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app.add_option("--engine", engine, "event (exponential waits) or time (fixed steps)")
        ->check(CLI::IsMember({"event", "time"}))
        ->capture_default_str();
    auto* o_delegation = app.add_option("--delegation", delegation,
                                        "event engine delegation: tree or scan")
                             ->check(CLI::IsMember({"tree", "scan"}))
                             ->capture_default_str();
    auto* o_dt = app.add_option("--dt", dt, "step size (time engine only)")
                     ->check(CLI::PositiveNumber);
    auto* o_horizon = app.add_option("--horizon", horizon, "simulated time to run")
                          ->check(CLI::PositiveNumber);
    app.add_option("--seed", seed, "random seed")->capture_default_str();
    app.add_option("--out", out, "output directory")->capture_default_str();

    try {
        parse_app(app, rest);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    std::vector<std::string> missing, conflicts;
    if (!o_customers->count()) missing.push_back("--customers");
    if (!o_horizon->count()) missing.push_back("--horizon");
    if (engine == "time" && !o_dt->count()) missing.push_back("--dt");
    if (engine == "event" && o_dt->count())
        conflicts.push_back("--dt conflicts with the event-driven engine: waits are drawn "
                            "from the aggregate rate, so there is no fixed step (use "
                            "--engine time)");
    if (engine == "time" && o_delegation->count())
        conflicts.push_back("--delegation applies to the event engine only");
    if (o_graph->count() && (o_degree->count() || o_vlo->count() || o_vhi->count()))
        conflicts.push_back("--graph-file supplies the call volumes; it conflicts with "
                            "--avg-degree/--vol-lo/--vol-hi");
    if (p1_same > p1_other)
        conflicts.push_back("--p1-same must not exceed --p1-other");
    if (p2_same > p2_other)
        conflicts.push_back("--p2-same must not exceed --p2-other");
    raise_problems("telecom", missing, conflicts);

    Echo echo;
    echo.put("customers", customers);
    if (o_graph->count()) {
        echo.put("graph-file", graph_file);
    } else {
        echo.put("avg-degree", avg_degree);
        echo.put("vol-lo", vol_lo);
        echo.put("vol-hi", vol_hi);
    }
    echo.put("p1-same", p1_same);
    echo.put("p1-other", p1_other);
    echo.put("p2-same", p2_same);
    echo.put("p2-other", p2_other);
    echo.put("alpha", alpha);
    echo.put("engine", engine);
    if (engine == "event") echo.put("delegation", delegation);
    if (engine == "time") echo.put("dt", dt);
    echo.put("horizon", horizon);
    echo.put("seed", seed);

    auto dir = prepare_out(out);
    write_echo(dir, echo);

    Timer timer;
    telecom::Market market(customers);
    if (o_graph->count()) {
        std::ifstream in(graph_file);
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty() || line == "caller,callee,minutes") continue;
            std::stringstream ss(line);
            std::string a, b, m;
            if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') ||
                !std::getline(ss, m))
                throw ConfigError("telecom: " + graph_file + ":" + std::to_string(lineno) +
                                  ": expected caller,callee,minutes");
            try {
                market.add_call_volume(std::stoi(a), std::stoi(b), std::stod(m));
            } catch (const std::exception& e) {
                throw ConfigError("telecom: " + graph_file + ":" + std::to_string(lineno) +
                                  ": " + e.what());
            }
        }
    } else {
        auto graph_stream = RandomStream::keyed(seed, 0x7E1E, 0);
        market = telecom::random_sparse_market(customers, avg_degree, vol_lo, vol_hi,
                                               graph_stream);
    }

    telecom::PlanConfig plans;
    plans.plan1 = {p1_same, p1_other};
    plans.plan2 = {p2_same, p2_other};
    plans.alpha = alpha;

    auto stream = RandomStream::keyed(seed, 0x7E1E, 1);
    telecom::RunResult run;
    if (engine == "event")
        run = telecom::run_event_driven(market, plans, horizon, stream,
                                        delegation == "tree" ? telecom::Delegation::Tree
                                                             : telecom::Delegation::Scan);
    else
        run = telecom::run_time_driven(market, plans, dt, horizon, stream);

    CsvTable events({"time", "customer", "new_provider"});
    for (const auto& e : run.events)
        events.begin_row().cell(e.time).cell(e.customer).cell(e.new_provider);
    events.write_file((dir / "switch_events.csv").string());

    auto shares = telecom::market_shares(market);
    CsvTable share_series({"time", "provider1", "provider2"});
    share_series.begin_row().cell(0.0).cell(shares[0]).cell(shares[1]);
    for (const auto& e : run.events) {
        if (e.new_provider == 2) {
            --shares[0];
            ++shares[1];
        } else {
            ++shares[0];
            --shares[1];
        }
        share_series.begin_row().cell(e.time).cell(shares[0]).cell(shares[1]);
    }
    share_series.write_file((dir / "market_share.csv").string());

    Metrics metrics;
    metrics.put("switches", static_cast<std::uint64_t>(run.events.size()));
    metrics.put("quiesced", run.quiesced ? 1 : 0);
    if (run.quiesced) metrics.put("quiescence_time", run.quiescence_time);
    metrics.put("final_share1", shares[0]);
    metrics.put("final_share2", shares[1]);
    metrics.put("cross_checks", run.cross_checks);
    if (engine == "event" && delegation == "tree") {
        metrics.put("delegation_selects", run.counters.selects);
        metrics.put("delegation_select_visits", run.counters.select_visits);
    }
    write_metrics(dir, metrics, timer);
    return 0;
}

// ---------------------------------------------------------------------------
// circuitnet
// ---------------------------------------------------------------------------

int cmd_circuitnet(const std::vector<std::string>& rest) {
    CLI::App app{"dynamically routed circuit-switched network", "mcsim circuitnet"};
    setup_common(app);

    std::string policy = "lba", eval = "lazy", engine = "sequential", boundaries,
                out = "mcsim_out";
    int nodes = 0, capacity = 10, workers = 1;
    double arrival_rate = 1.0, mean_holding = 1.0, dt = 0, horizon = 0;
    std::uint64_t seed = 1;

    auto* o_nodes = app.add_option("--nodes", nodes, "exchange count (complete graph)")
                        ->check(CLI::Range(2, 360));
    app.add_option("--capacity", capacity, "trunks per link")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    app.add_option("--arrival-rate", arrival_rate, "call arrival rate per node pair")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    app.add_option("--mean-holding", mean_holding, "mean call holding time")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app.add_option("--policy", policy, "routing policy: lba or alba")
        ->check(CLI::IsMember({"lba", "alba"}))
        ->capture_default_str();
    auto* o_bounds = app.add_option("--boundaries", boundaries,
                                    "alba load-class boundaries, e.g. 0.8,0.9");
    auto* o_eval = app.add_option("--eval", eval, "policy evaluation: lazy or anticipatory")
                       ->check(CLI::IsMember({"lazy", "anticipatory"}))
                       ->capture_default_str();
    app.add_option("--engine", engine, "sequential or syncrelax")
        ->check(CLI::IsMember({"sequential", "syncrelax"}))
        ->capture_default_str();
    auto* o_dt = app.add_option("--dt", dt, "relaxation strip width (syncrelax only)")
                     ->check(CLI::PositiveNumber);
    app.add_option("--workers", workers, "threads for the syncrelax engine")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    auto* o_horizon = app.add_option("--horizon", horizon, "simulated time to run")
                          ->check(CLI::PositiveNumber);
    app.add_option("--seed", seed, "random seed")->capture_default_str();
    app.add_option("--out", out, "output directory")->capture_default_str();

    try {
        parse_app(app, rest);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    std::vector<std::string> missing, conflicts;
    if (!o_nodes->count()) missing.push_back("--nodes");
    if (!o_horizon->count()) missing.push_back("--horizon");
    if (engine == "syncrelax" && !o_dt->count()) missing.push_back("--dt");
    if (policy == "lba" && o_bounds->count())
        conflicts.push_back("--boundaries configures alba load classes; it conflicts with "
                            "--policy lba, which ranks vias by idle trunks alone");
    if (engine == "sequential" && o_dt->count())
        conflicts.push_back("--dt conflicts with the sequential engine: it is the "
                            "relaxation strip width (use --engine syncrelax)");
    if (engine == "sequential" && workers > 1)
        conflicts.push_back("--workers applies to the syncrelax engine only");
    if (engine == "syncrelax" && o_eval->count())
        conflicts.push_back("--eval selects the sequential engine's query strategy; the "
                            "syncrelax engine evaluates policies directly");
    raise_problems("circuitnet", missing, conflicts);

    circuitnet::TrafficConfig cfg;
    cfg.nodes = nodes;
    cfg.capacity = capacity;
    cfg.arrival_rate = arrival_rate;
    cfg.mean_holding = mean_holding;
    cfg.policy = policy == "lba" ? circuitnet::Policy::LBA : circuitnet::Policy::ALBA;
    cfg.eval = eval == "lazy" ? circuitnet::Eval::Lazy : circuitnet::Eval::Anticipatory;
    cfg.seed = seed;
    if (o_bounds->count())
        cfg.scheme = circuitnet::LoadClassScheme(parse_double_list(boundaries, "--boundaries"));

    Echo echo;
    echo.put("nodes", nodes);
    echo.put("capacity", capacity);
    echo.put("arrival-rate", arrival_rate);
    echo.put("mean-holding", mean_holding);
    echo.put("policy", policy);
    if (policy == "alba") {
        std::vector<std::string> parts;
        for (double b : cfg.scheme.boundaries()) parts.push_back(format_double(b));
        echo.put("boundaries", join(parts, ","));
    }
    if (engine == "sequential") echo.put("eval", eval);
    echo.put("engine", engine);
    if (engine == "syncrelax") echo.put("dt", dt);
    echo.put("workers", workers);
    echo.put("horizon", horizon);
    echo.put("seed", seed);

    auto dir = prepare_out(out);
    write_echo(dir, echo);

    Timer timer;
    Metrics metrics;
    CsvTable blocking({"pair", "n1", "n2", "offered", "blocked", "fraction"});
    CsvTable counters({"counter", "value"});
    auto pair_rows = [&](const std::vector<std::uint64_t>& offered,
                         const std::vector<std::uint64_t>& blocked) {
        for (std::size_t p = 0; p < offered.size(); ++p) {
            auto [a, b] = circuitnet::Network::link_nodes(nodes, static_cast<int>(p));
            double frac = offered[p] ? static_cast<double>(blocked[p]) /
                                           static_cast<double>(offered[p])
                                     : 0.0;
            blocking.begin_row()
                .cell(static_cast<std::uint64_t>(p))
                .cell(a)
                .cell(b)
                .cell(offered[p])
                .cell(blocked[p])
                .cell(frac);
        }
    };

    if (engine == "sequential") {
        auto run = circuitnet::run_network(cfg, horizon);
        pair_rows(run.offered_per_pair, run.blocked_per_pair);
        counters.begin_row().cell("offered").cell(run.offered);
        counters.begin_row().cell("blocked").cell(run.blocked);
        counters.begin_row().cell("carried_direct").cell(run.carried_direct);
        counters.begin_row().cell("carried_via").cell(run.carried_via);
        counters.begin_row().cell("trunk_changes").cell(run.trunk_changes);
        counters.begin_row().cell("via_queries").cell(run.via_queries);
        counters.begin_row().cell("scan_visits").cell(run.scan_visits);
        counters.begin_row().cell("index_updates").cell(run.index_updates);
        counters.begin_row().cell("index_key_changes").cell(run.index_key_changes);
        metrics.put("offered", run.offered);
        metrics.put("blocked", run.blocked);
        metrics.put("blocking_fraction", run.blocking_fraction);
        metrics.put("active_at_end", static_cast<std::uint64_t>(run.active_at_end));
    } else {
        auto run = circuitnet::run_network_syncrelax(cfg, horizon, dt, workers);
        pair_rows(run.offered_per_pair, run.blocked_per_pair);
        std::uint64_t total_iterations = 0;
        for (const auto& s : run.relax.steps) total_iterations += s.iterations;
        counters.begin_row().cell("offered").cell(run.offered);
        counters.begin_row().cell("blocked").cell(run.blocked);
        counters.begin_row().cell("strips").cell(
            static_cast<std::uint64_t>(run.relax.steps.size()));
        counters.begin_row().cell("relaxation_iterations").cell(total_iterations);
        counters.begin_row().cell("max_strip_iterations").cell(run.relax.max_iterations);
        metrics.put("offered", run.offered);
        metrics.put("blocked", run.blocked);
        metrics.put("blocking_fraction",
                    run.offered ? static_cast<double>(run.blocked) /
                                      static_cast<double>(run.offered)
                                : 0.0);
    }
    blocking.write_file((dir / "blocking.csv").string());
    counters.write_file((dir / "counters.csv").string());
    write_metrics(dir, metrics, timer);
    return 0;
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

int cmd_verify(const std::vector<std::string>& rest) {
    CLI::App app{"cross-oracle self-checks of every engine", "mcsim verify"};
    setup_common(app);

    std::string suite, out = "mcsim_out";
    std::uint64_t seed = 1;
    bool inject = false;

    auto* o_suite =
        app.add_option("suite", suite, "dispenser, billiards, parallel, timedriven or all")
            ->check(CLI::IsMember({"dispenser", "billiards", "parallel", "timedriven", "all"}));
    app.add_option("--seed", seed, "random seed")->capture_default_str();
    auto* o_inject = app.add_flag("--inject-tree-fault", inject,
                                  "test-only: corrupt one sum-tree node so the dispenser "
                                  "checks must fail");
    app.add_option("--out", out, "output directory")->capture_default_str();

    try {
        parse_app(app, rest);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    std::vector<std::string> missing, conflicts;
    if (!o_suite->count()) missing.push_back("suite (positional)");
    raise_problems("verify", missing, conflicts);

    Echo echo;
    echo.put("suite", suite);
    echo.put("seed", seed);
    if (o_inject->count()) echo.put("inject-tree-fault", std::string("true"));

    auto dir = prepare_out(out);
    write_echo(dir, echo);

    Timer timer;
    verify::Options opt;
    opt.seed = seed;
    opt.inject_tree_fault = inject;
    auto checks = verify::run_suite(suite, opt);
    auto text = verify::report(checks);
    std::cout << text;
    write_text_file((dir / "report.txt").string(), text);

    std::uint64_t failures = 0;
    for (const auto& c : checks)
        if (!c.passed) ++failures;
    Metrics metrics;
    metrics.put("checks", static_cast<std::uint64_t>(checks.size()));
    metrics.put("failures", failures);
    write_metrics(dir, metrics, timer);
    return verify::all_passed(checks) ? 0 : 3;
}

const char* kUsage =
    "usage: mcsim <subcommand> [flags]\n"
    "\n"
    "subcommands:\n"
    "  billiards    hard balls in a one-dimensional gutter\n"
    "  deposition   ballistic deposition on a periodic substrate\n"
    "  ising        kinetic Ising model on a periodic square lattice\n"
    "  telecom      two-provider market of switching customers\n"
    "  circuitnet   dynamically routed circuit-switched network\n"
    "  verify       cross-oracle self-checks of every engine\n"
    "\n"
    "common flags: --seed, --horizon, --engine, --workers, --out, --config\n"
    "run `mcsim <subcommand> --help` for the full flag list.\n";

} // namespace

int run_command(const std::vector<std::string>& args) {
    if (args.empty()) {
        std::cerr << kUsage;
        return 2;
    }
    const std::string& sub = args[0];
    if (sub == "help" || sub == "--help" || sub == "-h") {
        std::cout << kUsage;
        return 0;
    }
    std::vector<std::string> rest(args.begin() + 1, args.end());
    try {
        if (sub == "billiards") return cmd_billiards(rest);
        if (sub == "deposition") return cmd_deposition(rest);
        if (sub == "ising") return cmd_ising(rest);
        if (sub == "telecom") return cmd_telecom(rest);
        if (sub == "circuitnet") return cmd_circuitnet(rest);
        if (sub == "verify") return cmd_verify(rest);
        std::cerr << "mcsim: unknown subcommand '" << sub << "'\n" << kUsage;
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "mcsim: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "mcsim: " << sub << ": " << e.what() << "\n";
        return 2;
    }
}

int run_main(int argc, const char* const* argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run_command(args);
}

} // namespace mcsim::cli
