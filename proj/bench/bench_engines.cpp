// Engine comparison benchmark.  Two familes of comparisons:
//
//   1. Serial reference engines vs the OpenMP engines that must reproduce
//      them exactly (cautious advancement on the deposition ring, synchronous
//      relaxation on the circuit-switched network) — the parallel runs are
//      checked against the reference while being timed.
//
//   2. Time-driven baselines vs event-driven engines on the same physics
//      (billiards gutter, telephone-market competition) at a step size
//      matched to the event-driven result.
//
// Built by default, never run by ctest.  On a single-core host the OpenMP
// rows show coordination overhead instead of speedup; the point of the table
// is the engine-for-engine contrast and the equality column.

#include <chrono>
#include <cstdio>
#include <string>

#include "mcsim/billiards.hpp"
#include "mcsim/circuitnet.hpp"
#include "mcsim/deposition.hpp"
#include "mcsim/parallel.hpp"
#include "mcsim/random.hpp"
#include "mcsim/telecom.hpp"

using namespace mcsim;

namespace {

double now_seconds() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

void row(const std::string& workload, const std::string& engine, double seconds,
         double ref_seconds, const std::string& check) {
    std::printf("%-34s %-26s %9.3fs %9.2fx  %s\n", workload.c_str(), engine.c_str(),
                seconds, ref_seconds / seconds, check.c_str());
}

void header() {
    std::printf("%-34s %-26s %10s %10s  %s\n", "workload", "engine", "wall",
                "vs-ref", "result");
    std::printf("%.*s\n", 96,
                "-----------------------------------------------------------------"
                "-------------------------------");
}

void bench_cautious() {
    deposition::DepositionConfig cfg;
    cfg.length = 24.0;
    cfg.sectors = 24;
    const double horizon = 1500.0;
    const std::uint64_t seed = 20260818;

    parallel::DepositionRing ref_model(cfg, seed);
    double t0 = now_seconds();
    auto ref = parallel::lockstep_emulate(ref_model, horizon, seed);
    double t_ref = now_seconds() - t0;
    row("deposition ring 24 sectors", "lockstep emulator (serial)", t_ref, t_ref,
        std::to_string(ref.events.size()) + " events");

    for (int workers : {1, 2, 4}) {
        parallel::DepositionRing model(cfg, seed);
        t0 = now_seconds();
        auto run = parallel::cautious_run(model, horizon, workers, seed);
        double t = now_seconds() - t0;
        row("deposition ring 24 sectors",
            "cautious, " + std::to_string(workers) + " worker(s)", t, t_ref,
            parallel::same_events(ref, run) ? "identical to reference"
                                            : "MISMATCH");
    }
    std::printf("\n");
}

void bench_syncrelax() {
    circuitnet::TrafficConfig cfg;
    cfg.nodes = 12;
    cfg.capacity = 8;
    cfg.arrival_rate = 9.0;
    cfg.mean_holding = 1.0;
    cfg.policy = circuitnet::Policy::LBA;
    cfg.seed = 20260818;
    const double horizon = 40.0;

    double t0 = now_seconds();
    auto ref = circuitnet::run_network(cfg, horizon);
    double t_ref = now_seconds() - t0;
    row("circuit network 12 nodes", "sequential reference", t_ref, t_ref,
        std::to_string(ref.offered) + " offered, " + std::to_string(ref.blocked) +
            " blocked");

    for (int workers : {1, 2, 4}) {
        t0 = now_seconds();
        auto run = circuitnet::run_network_syncrelax(cfg, horizon, 1.0, workers);
        double t = now_seconds() - t0;
        bool same = run.offered == ref.offered && run.blocked == ref.blocked &&
                    run.blocked_per_pair == ref.blocked_per_pair &&
                    run.final_occupancy == ref.final_occupancy;
        row("circuit network 12 nodes",
            "sync relaxation, " + std::to_string(workers) + " worker(s)", t, t_ref,
            same ? "identical to reference" : "MISMATCH");
    }
    std::printf("\n");
}

void bench_billiards() {
    billiards::GutterConfig cfg;
    cfg.n = 1000;
    cfg.x_left = 0.0;
    cfg.x_right = 1000.0;
    cfg.d0 = 0.05;
    const double horizon = 20.0;
    auto init = billiards::random_initial(cfg, 20260818);

    double t0 = now_seconds();
    auto td = billiards::run_timedriven(cfg, init, 1e-4, horizon);
    double t_ref = now_seconds() - t0;
    row("billiards 1000 balls", "time-driven, dt=1e-4", t_ref, t_ref,
        std::to_string(td.collision_count) + " collisions");

    t0 = now_seconds();
    auto lazy = billiards::run_lazy(cfg, init, horizon);
    row("billiards 1000 balls", "event-driven, lazy", now_seconds() - t0, t_ref,
        std::to_string(lazy.collision_count) + " collisions");

    t0 = now_seconds();
    auto ant = billiards::run_anticipatory(cfg, init, horizon);
    row("billiards 1000 balls", "event-driven, anticipatory", now_seconds() - t0,
        t_ref, std::to_string(ant.collision_count) + " collisions");
    std::printf("\n");
}

void bench_telecom() {
    telecom::PlanConfig plans;
    plans.plan1 = {0.05, 0.15};
    plans.plan2 = {0.10, 0.10};
    plans.alpha = 1.0;
    auto mk = RandomStream::keyed(20260818, 0);
    auto market = telecom::random_sparse_market(10000, 4.0, 1.0, 5.0, mk);
    const double horizon = 100.0;
    const double dt = 0.005;

    auto s_td = RandomStream::keyed(20260818, 1);
    double t0 = now_seconds();
    auto td = telecom::run_time_driven(market, plans, dt, horizon, s_td);
    double t_ref = now_seconds() - t0;
    row("telecom 10000 customers", "time-driven, dt=0.005", t_ref, t_ref,
        std::to_string(td.events.size()) + " switches");

    auto s_ev = RandomStream::keyed(20260818, 2);
    t0 = now_seconds();
    auto ev = telecom::run_event_driven(market, plans, horizon, s_ev);
    row("telecom 10000 customers", "event-driven, tree", now_seconds() - t0, t_ref,
        std::to_string(ev.events.size()) + " switches");
    std::printf("\n");
}

} // namespace

int main() {
    header();
    bench_cautious();
    bench_syncrelax();
    bench_billiards();
    bench_telecom();
    return 0;
}
