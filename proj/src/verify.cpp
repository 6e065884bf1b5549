#include "mcsim/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "mcsim/billiards.hpp"
#include "mcsim/circuitnet.hpp"
#include "mcsim/dispenser.hpp"
#include "mcsim/io.hpp"
#include "mcsim/parallel.hpp"
#include "mcsim/random.hpp"
#include "mcsim/telecom.hpp"

namespace mcsim::verify {
namespace {

// Stream-key namespaces, one per suite, so every suite is a pure function of
// the seed alone and "all" is exactly the concatenation of the four suites.
constexpr std::uint64_t kKeyDispenser = 0x76661000;
constexpr std::uint64_t kKeyBilliards = 0x76662000;
constexpr std::uint64_t kKeyParallel = 0x76663000;
constexpr std::uint64_t kKeyTimedriven = 0x76664000;

void add(std::vector<CheckResult>& out, const std::string& suite,
         const std::string& name, bool passed, const std::string& detail) {
    out.push_back(CheckResult{suite, name, passed, detail});
}

// ---------------------------------------------------------------------------
// dispenser: the sum tree and the class table against their scan oracles
// ---------------------------------------------------------------------------

void suite_dispenser(std::vector<CheckResult>& out, const Options& opt) {
    const std::string kSuite = "dispenser";

    { // tree selection against the linear-scan rule, across random rate sets
        std::uint64_t mismatches = 0;
        std::uint64_t draws = 0;
        for (int trial = 0; trial < 400; ++trial) {
            auto rng = RandomStream::keyed(opt.seed, kKeyDispenser + 1,
                                           static_cast<std::uint64_t>(trial));
            int n = 2 + static_cast<int>(rng.below(95));
            std::vector<double> rates(static_cast<std::size_t>(n));
            for (auto& r : rates) {
                r = rng.uniform01();
                if (rng.below(8) == 0) r = 0.0;
            }
            if (*std::max_element(rates.begin(), rates.end()) == 0.0) rates[0] = 0.5;
            RateTree tree(rates);
            for (int u = 0; u < n; ++u) {
                int i = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
                double r = rng.below(6) == 0 ? 0.0 : rng.uniform01();
                if (i == 0 && r == 0.0) r = 0.25; // keep the total positive
                rates[static_cast<std::size_t>(i)] = r;
                tree.update(i, r);
            }
            if (opt.inject_tree_fault)
                tree.corrupt_node_for_testing(2, 0.29 * tree.total() + 0.5);
            for (int d = 0; d < 8; ++d) {
                double q = rng.uniform01();
                ++draws;
                if (tree.select(q) != linear_scan_select(rates, q)) ++mismatches;
            }
        }
        add(out, kSuite, "tree-select-matches-scan", mismatches == 0,
            "mismatches=" + std::to_string(mismatches) + "/" + std::to_string(draws));
    }

    { // root drift after a long update stream
        auto rng = RandomStream::keyed(opt.seed, kKeyDispenser + 2);
        int n = 777;
        std::vector<double> rates(static_cast<std::size_t>(n));
        for (auto& r : rates) r = rng.uniform01();
        RateTree tree(rates);
        for (int u = 0; u < 10000; ++u) {
            int i = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
            double r = rng.uniform01();
            rates[static_cast<std::size_t>(i)] = r;
            tree.update(i, r);
        }
        if (opt.inject_tree_fault)
            tree.corrupt_node_for_testing(1, 0.37 * tree.total() + 1.0);
        double sum = 0;
        for (double r : rates) sum += r;
        double rel = std::fabs(tree.total() - sum) / sum;
        add(out, kSuite, "root-tracks-leaf-sum", rel <= 1e-9,
            "relative_error=" + format_double(rel));
    }

    { // every internal node equals the sum of its children
        auto rng = RandomStream::keyed(opt.seed, kKeyDispenser + 3);
        int n = 300;
        std::vector<double> rates(static_cast<std::size_t>(n));
        for (auto& r : rates) r = rng.uniform01();
        RateTree tree(rates);
        for (int u = 0; u < 5000; ++u)
            tree.update(static_cast<int>(rng.below(static_cast<std::uint64_t>(n))),
                        rng.uniform01());
        if (opt.inject_tree_fault)
            tree.corrupt_node_for_testing(2, 0.13 * tree.total() + 0.25);
        double err = tree.max_child_sum_error();
        add(out, kSuite, "internal-sums-consistent", err <= 1e-12,
            "max_child_sum_error=" + format_double(err));
    }

    { // class-table selection against the two-level scan it implements
        auto rng = RandomStream::keyed(opt.seed, kKeyDispenser + 4);
        int classes = 6, n = 300;
        std::vector<double> class_rates(static_cast<std::size_t>(classes));
        for (auto& r : class_rates) r = 0.1 + 1.9 * rng.uniform01();
        RateClassTable table(class_rates, n);
        for (int i = 0; i < n; ++i)
            table.assign(i, static_cast<int>(rng.below(static_cast<std::uint64_t>(classes))));
        std::uint64_t mismatches = 0, draws = 0;
        for (int d = 0; d < 2000; ++d) {
            if (d % 3 == 0) // keep populations moving between draws
                table.move(static_cast<int>(rng.below(static_cast<std::uint64_t>(n))),
                           static_cast<int>(rng.below(static_cast<std::uint64_t>(classes))));
            double qc = rng.uniform01(), qm = rng.uniform01();
            // Oracle: first class whose cumulative rate*population passes the
            // scaled draw, then the member at floor(q * population).
            double total = 0;
            for (int c = 0; c < classes; ++c)
                total += class_rates[static_cast<std::size_t>(c)] *
                         static_cast<double>(table.members(c).size());
            double theta = total * qc, prefix = 0;
            int cls = -1;
            for (int c = 0; c < classes; ++c) {
                prefix += class_rates[static_cast<std::size_t>(c)] *
                          static_cast<double>(table.members(c).size());
                if (theta < prefix) { cls = c; break; }
            }
            if (cls == -1) {
                for (int c = classes - 1; c >= 0; --c)
                    if (!table.members(c).empty()) { cls = c; break; }
            }
            const auto& m = table.members(cls);
            auto idx = static_cast<std::size_t>(qm * static_cast<double>(m.size()));
            if (idx >= m.size()) idx = m.size() - 1;
            int expect = m[idx];
            ++draws;
            if (table.select(qc, qm) != expect) ++mismatches;
        }
        add(out, kSuite, "class-select-matches-two-level-scan", mismatches == 0,
            "mismatches=" + std::to_string(mismatches) + "/" + std::to_string(draws));
    }

    { // uniformized polling accepts at the aggregate-rate fraction
        auto rng = RandomStream::keyed(opt.seed, kKeyDispenser + 5);
        int n = 32;
        std::vector<double> rates(static_cast<std::size_t>(n));
        double sum = 0;
        for (auto& r : rates) { r = rng.uniform01(); sum += r; }
        double r_star = 1.0;
        UniformizedSampler sampler(n, r_star);
        const std::uint64_t polls = 20000;
        for (std::uint64_t k = 0; k < polls; ++k)
            sampler.poll([&](int i) { return rates[static_cast<std::size_t>(i)]; }, rng);
        double p = sum / (static_cast<double>(n) * r_star);
        double f = static_cast<double>(sampler.accepted()) / static_cast<double>(polls);
        double band = 4.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(polls));
        add(out, kSuite, "uniformized-acceptance-rate", std::fabs(f - p) <= band,
            "fraction=" + format_double(f) + " expected=" + format_double(p) +
                " band=" + format_double(band));
    }
}

// ---------------------------------------------------------------------------
// billiards: lazy vs anticipatory scheduling on identical initial conditions
// ---------------------------------------------------------------------------

void suite_billiards(std::vector<CheckResult>& out, const Options& opt) {
    const std::string kSuite = "billiards";
    using namespace billiards;

    std::uint64_t log_mismatches = 0, velocity_mismatches = 0, runs = 0;
    for (int trial = 0; trial < 5; ++trial) {
        GutterConfig cfg;
        cfg.n = 40;
        cfg.x_left = 0.0;
        cfg.x_right = 40.0;
        cfg.d0 = 0.05;
        cfg.growth = 0.0;
        auto seed = RandomStream::keyed(opt.seed, kKeyBilliards + 1,
                                        static_cast<std::uint64_t>(trial))
                        .next_u64();
        auto init = random_initial(cfg, seed);
        auto lazy = run_lazy(cfg, init, 25.0);
        auto ant = run_anticipatory(cfg, init, 25.0);
        auto pl = physical_events(lazy.events);
        auto pa = physical_events(ant.events);
        ++runs;
        if (pl.size() != pa.size()) {
            ++log_mismatches;
        } else {
            for (std::size_t i = 0; i < pl.size(); ++i)
                if (pl[i].time != pa[i].time || pl[i].subject != pa[i].subject ||
                    pl[i].kind != pa[i].kind) {
                    ++log_mismatches;
                    break;
                }
        }
        // Pair collisions swap velocities and wall bounces negate them, so
        // the conserved multiset is the speeds.
        std::vector<double> v0, v1, v2;
        for (const auto& b : init) v0.push_back(std::fabs(b.v));
        for (const auto& b : lazy.final_balls) v1.push_back(std::fabs(b.v));
        for (const auto& b : ant.final_balls) v2.push_back(std::fabs(b.v));
        std::sort(v0.begin(), v0.end());
        std::sort(v1.begin(), v1.end());
        std::sort(v2.begin(), v2.end());
        if (v0 != v1 || v0 != v2) ++velocity_mismatches;
    }
    add(out, kSuite, "lazy-matches-anticipatory", log_mismatches == 0,
        "mismatched_runs=" + std::to_string(log_mismatches) + "/" + std::to_string(runs));
    add(out, kSuite, "speed-multiset-conserved", velocity_mismatches == 0,
        "mismatched_runs=" + std::to_string(velocity_mismatches) + "/" + std::to_string(runs));

    { // swelling balls jam at the analytic packing instant
        GutterConfig cfg;
        cfg.n = 12;
        cfg.x_left = 0.0;
        cfg.x_right = 6.0;
        cfg.d0 = 0.02;
        cfg.growth = 0.004;
        auto seed = RandomStream::keyed(opt.seed, kKeyBilliards + 2).next_u64();
        auto init = random_initial(cfg, seed);
        double t_jam = jam_time(cfg);
        auto lazy = run_lazy(cfg, init, 2.0 * t_jam);
        auto ant = run_anticipatory(cfg, init, 2.0 * t_jam);
        bool ok = lazy.jammed && ant.jammed &&
                  std::fabs(lazy.jam_time - t_jam) <= 1e-9 * t_jam &&
                  std::fabs(ant.jam_time - t_jam) <= 1e-9 * t_jam;
        add(out, kSuite, "swelling-jam-detection", ok,
            "analytic=" + format_double(t_jam) + " lazy=" + format_double(lazy.jam_time) +
                " anticipatory=" + format_double(ant.jam_time));
    }
}

// ---------------------------------------------------------------------------
// parallel: threaded engines against their sequential references
// ---------------------------------------------------------------------------

void suite_parallel(std::vector<CheckResult>& out, const Options& opt) {
    const std::string kSuite = "parallel";
    using namespace parallel;

    { // cautious advancement against the lockstep emulator
        deposition::DepositionConfig cfg;
        cfg.length = 24.0;
        cfg.sectors = 12;
        auto seed = RandomStream::keyed(opt.seed, kKeyParallel + 1).next_u64();
        DepositionRing ref_model(cfg, seed);
        auto ref = lockstep_emulate(ref_model, 30.0, seed);
        bool ok = true;
        for (int workers : {1, 2}) {
            DepositionRing model(cfg, seed);
            auto run = cautious_run(model, 30.0, workers, seed);
            ok = ok && same_events(ref, run);
        }
        add(out, kSuite, "cautious-matches-lockstep", ok,
            "events=" + std::to_string(ref.events.size()));
    }

    { // synchronous relaxation commits the same trajectory for any worker count
        auto seed = RandomStream::keyed(opt.seed, kKeyParallel + 2).next_u64();
        SprinkleField one(24, 1.0, seed);
        auto r1 = syncrelax_run(one, 6.0, 1.0, 1);
        SprinkleField three(24, 1.0, seed);
        auto r3 = syncrelax_run(three, 6.0, 1.0, 3);
        bool ok = r1.events.size() == r3.events.size();
        if (ok)
            for (std::size_t i = 0; i < r1.events.size(); ++i)
                if (!(r1.events[i] == r3.events[i])) { ok = false; break; }
        add(out, kSuite, "syncrelax-worker-invariance", ok,
            "events=" + std::to_string(r1.events.size()) +
                " max_iterations=" + std::to_string(std::max(r1.max_iterations, r3.max_iterations)));
    }

    { // fully decoupled components settle every strip in a single pass
        auto seed = RandomStream::keyed(opt.seed, kKeyParallel + 3).next_u64();
        DecoupledStreams model(16, 2.0, seed);
        auto run = syncrelax_run(model, 8.0, 1.0, 4);
        bool ok = true;
        for (const auto& s : run.steps) ok = ok && s.iterations == 1;
        add(out, kSuite, "decoupled-streams-single-pass", ok,
            "steps=" + std::to_string(run.steps.size()) +
                " max_iterations=" + std::to_string(run.max_iterations));
    }

    { // relaxed network run against the sequential reference engine
        circuitnet::TrafficConfig cfg;
        cfg.nodes = 6;
        cfg.capacity = 4;
        cfg.arrival_rate = 5.0;
        cfg.mean_holding = 1.0;
        cfg.policy = circuitnet::Policy::LBA;
        cfg.seed = RandomStream::keyed(opt.seed, kKeyParallel + 4).next_u64();
        auto seq = circuitnet::run_network(cfg, 6.0);
        auto par = circuitnet::run_network_syncrelax(cfg, 6.0, 0.5, 2);
        bool ok = seq.offered == par.offered && seq.blocked == par.blocked &&
                  seq.final_occupancy == par.final_occupancy;
        add(out, kSuite, "relaxed-network-matches-sequential", ok,
            "offered=" + std::to_string(seq.offered) +
                " blocked=" + std::to_string(seq.blocked));
    }
}

// ---------------------------------------------------------------------------
// timedriven: fixed-step engines converging on the event-driven results
// ---------------------------------------------------------------------------

void suite_timedriven(std::vector<CheckResult>& out, const Options& opt) {
    const std::string kSuite = "timedriven";
    using namespace billiards;

    GutterConfig cfg;
    cfg.n = 20;
    cfg.x_left = 0.0;
    cfg.x_right = 20.0;
    cfg.d0 = 0.05;
    cfg.growth = 0.0;
    auto seed = RandomStream::keyed(opt.seed, kKeyTimedriven + 1).next_u64();
    auto init = random_initial(cfg, seed);
    const double horizon = 8.0;
    auto ref = run_anticipatory(cfg, init, horizon);

    std::vector<double> errs;
    RunResult mid;
    for (double dt : {1e-2, 1e-3, 1e-4}) {
        auto td = run_timedriven(cfg, init, dt, horizon);
        if (dt == 1e-3) mid = td;
        double err = 0;
        for (int i = 0; i < cfg.n; ++i)
            err = std::max(err, std::fabs(td.final_balls[static_cast<std::size_t>(i)].x -
                                          ref.final_balls[static_cast<std::size_t>(i)].x));
        errs.push_back(err);
    }
    add(out, kSuite, "billiards-dt-convergence", errs[0] > errs[1] && errs[1] > errs[2],
        "err(1e-2)=" + format_double(errs[0]) + " err(1e-3)=" + format_double(errs[1]) +
            " err(1e-4)=" + format_double(errs[2]));

    { // swaps and sign flips only: the fixed-step engine keeps every speed
        std::vector<double> v0, v1;
        for (const auto& b : init) v0.push_back(std::fabs(b.v));
        for (const auto& b : mid.final_balls) v1.push_back(std::fabs(b.v));
        std::sort(v0.begin(), v0.end());
        std::sort(v1.begin(), v1.end());
        add(out, kSuite, "timedriven-speed-multiset", v0 == v1,
            "balls=" + std::to_string(v0.size()));
    }

    { // fixed-step market dynamics reach genuine quiescence
        auto rng = RandomStream::keyed(opt.seed, kKeyTimedriven + 2);
        auto market = telecom::random_sparse_market(60, 3.0, 1.0, 5.0, rng);
        telecom::PlanConfig plans;
        plans.plan1 = {0.05, 0.15};
        plans.plan2 = {0.10, 0.10};
        plans.alpha = 1.0;
        auto run = telecom::run_time_driven(market, plans, 0.05, 2000.0, rng);
        telecom::Market final_market = market;
        for (int i = 0; i < final_market.size(); ++i)
            final_market.set_subscription(i, run.final_subscriptions[static_cast<std::size_t>(i)]);
        long long left = telecom::unsatisfied_lazy(final_market, plans);
        add(out, kSuite, "telecom-timedriven-quiescence", run.quiesced && left == 0,
            "switches=" + std::to_string(run.events.size()) +
                " unsatisfied_at_end=" + std::to_string(left));
    }
}

} // namespace

const std::vector<std::string>& suite_names() {
    static const std::vector<std::string> kNames = {"dispenser", "billiards", "parallel",
                                                    "timedriven"};
    return kNames;
}

bool is_suite(const std::string& s) {
    if (s == "all") return true;
    for (const auto& n : suite_names())
        if (n == s) return true;
    return false;
}

std::vector<CheckResult> run_suite(const std::string& suite, const Options& opt) {
    std::vector<CheckResult> out;
    if (suite == "all") {
        for (const auto& n : suite_names()) {
            auto part = run_suite(n, opt);
            out.insert(out.end(), part.begin(), part.end());
        }
        return out;
    }
    if (suite == "dispenser")
        suite_dispenser(out, opt);
    else if (suite == "billiards")
        suite_billiards(out, opt);
    else if (suite == "parallel")
        suite_parallel(out, opt);
    else if (suite == "timedriven")
        suite_timedriven(out, opt);
    else
        throw std::invalid_argument("verify: unknown suite '" + suite + "'");
    return out;
}

std::string report(const std::vector<CheckResult>& checks) {
    std::string out = "suite,check,status,detail\n";
    for (const auto& c : checks) {
        out += c.suite;
        out += ',';
        out += c.name;
        out += ',';
        out += c.passed ? "pass" : "fail";
        out += ',';
        out += c.detail;
        out += '\n';
    }
    return out;
}

bool all_passed(const std::vector<CheckResult>& checks) {
    for (const auto& c : checks)
        if (!c.passed) return false;
    return true;
}

} // namespace mcsim::verify
