#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "mcsim/stats.hpp"
#include "mcsim/telecom.hpp"

using namespace mcsim;
using namespace mcsim::telecom;

namespace {

PlanConfig discount_plans() {
    PlanConfig p;
    p.plan1 = Plan{0.10, 0.25};
    p.plan2 = Plan{0.12, 0.22};
    p.alpha = 0.02;
    return p;
}

// One-sample Kolmogorov-Smirnov distance against Exp(rate).
double ks_vs_exponential(std::vector<double> x, double rate) {
    std::sort(x.begin(), x.end());
    double n = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double f = 1.0 - std::exp(-rate * x[i]);
        d = std::max(d, std::fabs((static_cast<double>(i) + 1.0) / n - f));
        d = std::max(d, std::fabs(static_cast<double>(i) / n - f));
    }
    return d;
}

} // namespace

TEST_CASE("bills charge discount minutes in-network and regular minutes out") {
    Market m(3);
    m.add_call_volume(0, 1, 100.0);
    m.add_call_volume(0, 2, 50.0);
    m.set_subscription(1, 1);
    m.set_subscription(2, 2);

    PlanConfig plans;
    plans.plan1 = Plan{0.10, 0.25};
    plans.plan2 = Plan{0.20, 0.20}; // flat
    plans.alpha = 1.0;

    CHECK(bill(m, plans, 0, 1) == 22.5);  // 100*0.10 + 50*0.25
    CHECK(bill(m, plans, 0, 2) == 30.0);  // flat: 150*0.20 regardless of friends
    CHECK(bill(m, plans, 1, 1) == 0.0);   // no outgoing calls
    CHECK(bill(m, plans, 1, 2) == 0.0);

    // The flat bill ignores every callee subscription.
    m.set_subscription(1, 2);
    m.set_subscription(2, 1);
    CHECK(bill(m, plans, 0, 2) == 30.0);

    // Repeated volume declarations accumulate.
    Market acc(2);
    acc.add_call_volume(0, 1, 60.0);
    acc.add_call_volume(0, 1, 40.0);
    CHECK(bill(acc, plans, 0, 1) == 100.0 * 0.10);
}

TEST_CASE("pull rate is linear in the gap and zero for the satisfied") {
    PlanConfig plans;
    plans.plan1 = Plan{0.20, 0.20};
    plans.plan2 = Plan{0.10, 0.10};
    plans.alpha = 0.1;

    // Flat plans: gap = volume * (0.20 - 0.10), independent of the friend.
    Market m(2);
    m.add_call_volume(0, 1, 75.0);
    CHECK(bill(m, plans, 0, 1) == 15.0);
    CHECK(bill(m, plans, 0, 2) == doctest::Approx(7.5).epsilon(1e-15));
    CHECK(pull_rate(m, plans, 0) == doctest::Approx(0.75).epsilon(1e-15)); // 0.1 * 7.5
    CHECK(pull_rate(m, plans, 1) == 0.0); // no calls, tie -> satisfied

    // On the cheap provider already: no pull.
    m.set_subscription(0, 2);
    CHECK(pull_rate(m, plans, 0) == 0.0);

    // Equal bills count as satisfied.
    PlanConfig same;
    same.plan1 = Plan{0.15, 0.15};
    same.plan2 = Plan{0.15, 0.15};
    same.alpha = 5.0;
    m.set_subscription(0, 1);
    CHECK(pull_rate(m, same, 0) == 0.0);

    // Monotone in the volume (hence in the gap), across random pairs.
    auto rng = RandomStream::keyed(314, 0);
    for (int trial = 0; trial < 1000; ++trial) {
        double va = 1.0 + rng.uniform01() * 500.0;
        double vb = 1.0 + rng.uniform01() * 500.0;
        Market ma(2), mb(2);
        ma.add_call_volume(0, 1, va);
        mb.add_call_volume(0, 1, vb);
        double ra = pull_rate(ma, plans, 0);
        double rb = pull_rate(mb, plans, 0);
        if (va < vb) CHECK(ra <= rb);
        else CHECK(rb <= ra);
    }

    PlanConfig bad = plans;
    bad.alpha = -0.5;
    CHECK_THROWS_AS(pull_rate(m, bad, 0), std::invalid_argument);
}

TEST_CASE("switching flips the provider by the 3-x map") {
    Market m(2);
    m.add_call_volume(0, 1, 10.0);
    CHECK(m.subscription(0) == 1);
    switch_customer(m, 0);
    CHECK(m.subscription(0) == 2);
    switch_customer(m, 0);
    CHECK(m.subscription(0) == 1);
}

TEST_CASE("a switch changes rates only inside the calling neighborhood") {
    auto rng = RandomStream::keyed(770, 0);
    Market m = random_sparse_market(60, 4.0, 5.0, 150.0, rng);
    PlanConfig plans = discount_plans();

    for (int i : {0, 7, 23, 41, 59}) {
        std::vector<double> before(60);
        for (int j = 0; j < 60; ++j) before[static_cast<std::size_t>(j)] = pull_rate(m, plans, j);
        switch_customer(m, i);
        auto listed = m.refresh_set(i);
        for (int j = 0; j < 60; ++j) {
            double after = pull_rate(m, plans, j);
            if (after != before[static_cast<std::size_t>(j)]) {
                bool in_set = std::binary_search(listed.begin(), listed.end(), j);
                CHECK(in_set);
            }
        }
        CHECK(std::binary_search(listed.begin(), listed.end(), i));
    }

    // An isolated customer's switch perturbs nobody else.
    Market iso(3);
    iso.add_call_volume(1, 2, 20.0);
    CHECK(iso.refresh_set(0) == std::vector<int>{0});
}

TEST_CASE("all-satisfied market quiesces immediately with zero events") {
    Market m(5);
    m.add_call_volume(0, 1, 100.0);
    m.add_call_volume(2, 3, 40.0);
    PlanConfig plans;
    plans.plan1 = Plan{0.10, 0.10};
    plans.plan2 = Plan{0.30, 0.30}; // provider 1 always cheaper; all start on 1
    plans.alpha = 1.0;

    auto s1 = RandomStream::keyed(42, 0);
    RunResult ev = run_event_driven(m, plans, 100.0, s1);
    CHECK(ev.events.empty());
    CHECK(ev.quiesced);
    CHECK(ev.quiescence_time == 0.0);

    auto s2 = RandomStream::keyed(42, 1);
    RunResult td = run_time_driven(m, plans, 0.1, 10.0, s2);
    CHECK(td.events.empty());
    CHECK(td.quiesced);
}

TEST_CASE("mutual friends on split providers settle with exactly one switch") {
    PlanConfig plans;
    plans.plan1 = Plan{0.05, 0.30};
    plans.plan2 = Plan{0.05, 0.30};
    plans.alpha = 0.1;

    int zero_switched = 0;
    double time_sum = 0.0;
    const int reps = 2000;
    for (int rep = 0; rep < reps; ++rep) {
        Market m(2);
        m.add_call_volume(0, 1, 100.0);
        m.add_call_volume(1, 0, 100.0);
        m.set_subscription(1, 2);
        // Each current bill is 30, each alternative 5: both pull at 2.5.
        CHECK(pull_rate(m, plans, 0) == doctest::Approx(2.5).epsilon(1e-15));
        CHECK(pull_rate(m, plans, 1) == doctest::Approx(2.5).epsilon(1e-15));

        auto stream = RandomStream::keyed(9000, static_cast<std::uint64_t>(rep));
        RunResult res = run_event_driven(m, plans, 1000.0, stream);
        REQUIRE(res.events.size() == 1);
        CHECK(res.quiesced);
        CHECK(res.quiescence_time == res.events[0].time);
        CHECK(res.final_subscriptions[0] == res.final_subscriptions[1]);
        if (res.events[0].customer == 0) ++zero_switched;
        time_sum += res.events[0].time;
    }
    // The switcher is a fair pick between the two equal rates.
    CHECK(std::fabs(zero_switched - reps / 2.0) <= 4.0 * std::sqrt(reps * 0.25));
    // First-event time is exponential with the aggregate rate 5.
    double mean = time_sum / reps;
    CHECK(std::fabs(mean - 0.2) <= 4.0 * 0.2 / std::sqrt(double(reps)));
}

TEST_CASE("tree delegation reproduces the linear-scan trajectory bit for bit") {
    PlanConfig plans = discount_plans();
    for (std::uint64_t seed : {11u, 12u, 13u}) {
        auto gen = RandomStream::keyed(500, seed);
        Market m = random_sparse_market(200, 6.0, 10.0, 200.0, gen);

        auto s1 = RandomStream::keyed(501, seed);
        RunResult tree = run_event_driven(m, plans, 50.0, s1, Delegation::Tree);
        auto s2 = RandomStream::keyed(501, seed);
        RunResult scan = run_event_driven(m, plans, 50.0, s2, Delegation::Scan);

        REQUIRE(tree.events.size() == scan.events.size());
        REQUIRE(tree.events.size() > 100);
        for (std::size_t k = 0; k < tree.events.size(); ++k) {
            CHECK(tree.events[k].time == scan.events[k].time);
            CHECK(tree.events[k].customer == scan.events[k].customer);
            CHECK(tree.events[k].new_provider == scan.events[k].new_provider);
        }
        CHECK(tree.final_subscriptions == scan.final_subscriptions);
        CHECK(tree.quiesced == scan.quiesced);
        CHECK(tree.cross_checks == scan.cross_checks);
        CHECK(tree.counters.selects == tree.events.size());
    }
}

TEST_CASE("maintained unsatisfied counter equals a lazy scan at every instant") {
    auto gen = RandomStream::keyed(600, 0);
    Market m = random_sparse_market(150, 5.0, 5.0, 120.0, gen);
    PlanConfig plans = discount_plans();
    plans.alpha = 0.01;

    double horizon = 40.0;
    std::vector<double> reports;
    for (int k = 1; k <= 1000; ++k) reports.push_back(horizon * k / 1000.0);

    auto stream = RandomStream::keyed(601, 0);
    RunResult res = run_event_driven(m, plans, horizon, stream, Delegation::Tree, reports);
    REQUIRE(res.counter_reports.size() == reports.size());
    REQUIRE(res.events.size() > 50);

    // Replay subscriptions up to each instant and rescan from scratch.
    Market replay = m;
    std::size_t ei = 0;
    for (std::size_t k = 0; k < reports.size(); ++k) {
        double tau = reports[k];
        while (ei < res.events.size() && res.events[ei].time <= tau) {
            switch_customer(replay, res.events[ei].customer);
            CHECK(replay.subscription(res.events[ei].customer) == res.events[ei].new_provider);
            ++ei;
        }
        CHECK(res.counter_reports[k].first == tau);
        CHECK(res.counter_reports[k].second == unsatisfied_lazy(replay, plans));
        auto shares = market_shares(replay);
        CHECK(shares[0] + shares[1] == replay.size());
    }
    for (int i = 0; i < replay.size(); ++i)
        CHECK(replay.subscription(i) == res.final_subscriptions[static_cast<std::size_t>(i)]);
}

TEST_CASE("time-driven single switcher converges to the exponential law") {
    PlanConfig plans;
    plans.plan1 = Plan{0.30, 0.30};
    plans.plan2 = Plan{0.10, 0.10};
    plans.alpha = 0.05; // rate = 0.05 * (30 - 10) = 1.0

    std::vector<double> times;
    int censored = 0;
    const int reps = 2000;
    for (int rep = 0; rep < reps; ++rep) {
        Market m(2);
        m.add_call_volume(0, 1, 100.0);
        auto stream = RandomStream::keyed(7100, static_cast<std::uint64_t>(rep));
        RunResult res = run_time_driven(m, plans, 1e-3, 10.0, stream);
        if (res.events.empty()) {
            ++censored; // switch landed beyond the window
            continue;
        }
        REQUIRE(res.events.size() == 1);
        CHECK(res.events[0].customer == 0);
        CHECK(res.quiesced);
        times.push_back(res.events[0].time);
    }
    CHECK(censored <= 2);
    double d = ks_vs_exponential(times, 1.0);
    CHECK(d < 1.9495 / std::sqrt(static_cast<double>(times.size())));
}

TEST_CASE("event-driven and time-driven final shares agree in distribution") {
    PlanConfig plans = discount_plans();
    plans.alpha = 0.015;
    std::vector<double> ev_share, td_share;
    for (int s = 0; s < 100; ++s) {
        auto gen = RandomStream::keyed(820, static_cast<std::uint64_t>(s));
        Market m = random_sparse_market(80, 4.0, 5.0, 150.0, gen);

        auto s1 = RandomStream::keyed(821, static_cast<std::uint64_t>(s));
        RunResult ev = run_event_driven(m, plans, 30.0, s1);
        auto s2 = RandomStream::keyed(822, static_cast<std::uint64_t>(s));
        RunResult td = run_time_driven(m, plans, 2e-3, 30.0, s2);

        auto count1 = [](const std::vector<int>& subs) {
            return double(std::count(subs.begin(), subs.end(), 1));
        };
        ev_share.push_back(count1(ev.final_subscriptions));
        td_share.push_back(count1(td.final_subscriptions));
    }
    CHECK(stats::ks_two_sample(ev_share, td_share) < stats::ks_critical_001(100, 100));
}

TEST_CASE("long runs audit the incremental caches at the fixed period") {
    auto gen = RandomStream::keyed(901, 0);
    Market m = random_sparse_market(3000, 5.0, 5.0, 150.0, gen);
    PlanConfig plans = discount_plans();
    auto stream = RandomStream::keyed(902, 0);
    RunResult res = run_event_driven(m, plans, 200.0, stream);
    REQUIRE(res.events.size() >= kCrossCheckPeriod);
    CHECK(res.cross_checks == res.events.size() / kCrossCheckPeriod);
}

TEST_CASE("oversized step probability and bad inputs are rejected") {
    Market m(2);
    m.add_call_volume(0, 1, 100.0);
    PlanConfig plans;
    plans.plan1 = Plan{0.30, 0.30};
    plans.plan2 = Plan{0.10, 0.10};
    plans.alpha = 1.0; // rate 20; dt 0.1 gives probability 2
    auto stream = RandomStream::keyed(1, 0);
    CHECK_THROWS_AS(run_time_driven(m, plans, 0.1, 1.0, stream), std::invalid_argument);
    CHECK_THROWS_AS(run_time_driven(m, plans, 0.0, 1.0, stream), std::invalid_argument);
    CHECK_THROWS_AS(run_event_driven(m, plans, -1.0, stream), std::invalid_argument);

    PlanConfig inverted;
    inverted.plan1 = Plan{0.30, 0.10}; // discount above regular
    inverted.plan2 = Plan{0.10, 0.10};
    CHECK_THROWS_AS(bill(m, inverted, 0, 1), std::invalid_argument);
    PlanConfig negative;
    negative.plan1 = Plan{-0.10, 0.10};
    negative.plan2 = Plan{0.10, 0.10};
    CHECK_THROWS_AS(bill(m, negative, 0, 1), std::invalid_argument);

    CHECK_THROWS_AS(m.add_call_volume(0, 0, 10.0), std::invalid_argument);
    CHECK_THROWS_AS(m.add_call_volume(0, 1, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(m.add_call_volume(0, 5, 10.0), std::invalid_argument);
    CHECK_THROWS_AS(m.set_subscription(0, 3), std::invalid_argument);
    CHECK_THROWS_AS(Market(0), std::invalid_argument);

    auto g = RandomStream::keyed(2, 0);
    CHECK_THROWS_AS(random_sparse_market(1, 3.0, 1.0, 2.0, g), std::invalid_argument);
    CHECK_THROWS_AS(random_sparse_market(10, -1.0, 1.0, 2.0, g), std::invalid_argument);
    CHECK_THROWS_AS(random_sparse_market(10, 3.0, 2.0, 1.0, g), std::invalid_argument);

    std::vector<double> unsorted{2.0, 1.0};
    auto s3 = RandomStream::keyed(3, 0);
    CHECK_THROWS_AS(
        run_event_driven(m, plans, 1.0, s3, Delegation::Tree, unsorted),
        std::invalid_argument);
}
