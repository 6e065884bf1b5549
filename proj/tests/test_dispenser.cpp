#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "mcsim/dispenser.hpp"
#include "mcsim/random.hpp"

using namespace mcsim;

namespace {

int ceil_log2(int n) {
    int k = 0;
    while ((1 << k) < n) ++k;
    return k;
}

// Exhaustive rebuild oracle: recompute every rate from scratch and compare
// select decisions against the incrementally updated tree.
std::vector<double> random_rates(RandomStream& rng, int n, double zero_prob = 0.2) {
    std::vector<double> r(static_cast<std::size_t>(n));
    bool any = false;
    for (auto& x : r) {
        if (rng.uniform01() < zero_prob) {
            x = 0.0;
        } else {
            x = rng.range(0.01, 10.0);
            any = true;
        }
    }
    if (!any) r[0] = 1.0;
    return r;
}

} // namespace

TEST_CASE("linear scan lands on prefix-sum cells") {
    std::vector<double> r{2.0, 3.0};
    CHECK(linear_scan_select(r, 0.5) == 1); // theta = 2.5 falls in [2,5)
    CHECK(linear_scan_select(r, 0.0) == 0);
    CHECK(linear_scan_select(r, 0.3999) == 0);
    std::vector<double> one{7.0};
    for (double q : {0.0, 0.3, 0.99}) CHECK(linear_scan_select(one, q) == 0);
    std::vector<double> zeros{0.0, 0.0};
    CHECK_THROWS_AS(linear_scan_select(zeros, 0.5), NoActiveComponents);
}

TEST_CASE("tree select follows the left-sum descent rule") {
    RateTree t({1, 1, 1, 1});
    CHECK(t.select(0.625) == 2); // theta = 2.5: right subtree, then left leaf
    RateTree lone({0, 5, 0, 0});
    for (double q : {0.0, 0.2, 0.5, 0.9, 0.999}) CHECK(lone.select(q) == 1);
    RateTree single({3.0});
    CHECK(single.select(0.7) == 0);
    RateTree dead({0.0, 0.0, 0.0});
    CHECK_THROWS_AS(dead.select(0.1), NoActiveComponents);
    CHECK_THROWS_AS(t.select(1.0), std::invalid_argument);
    CHECK_THROWS_AS(t.select(-0.1), std::invalid_argument);
}

TEST_CASE("tree update rewrites the leaf-to-root path only") {
    RateTree t({1, 1, 1, 1});
    CHECK(t.total() == 4.0);
    t.update(1, 2.0);
    CHECK(t.total() == 5.0);
    CHECK(t.rate(1) == 2.0);
    CHECK_THROWS_AS(t.update(4, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(t.update(0, -1.0), std::invalid_argument);

    for (int n : {2, 5, 8, 100, 1000, 1024}) {
        RandomStream rng = RandomStream::keyed(11, static_cast<std::uint64_t>(n));
        RateTree tree(random_rates(rng, n));
        tree.reset_counters();
        int writes_expected = ceil_log2(n) + 1;
        for (int rep = 0; rep < 10; ++rep) {
            auto before = tree.counters().node_writes;
            tree.update(static_cast<int>(rng.below(static_cast<std::uint64_t>(n))), rng.range(0.0, 5.0));
            CHECK(static_cast<int>(tree.counters().node_writes - before) == writes_expected);
        }
        tree.reset_counters();
        tree.select(0.5);
        CHECK(static_cast<int>(tree.counters().select_visits) == ceil_log2(n));
    }
}

TEST_CASE("updated tree equals a freshly rebuilt tree") {
    RandomStream rng = RandomStream::keyed(3, 1);
    std::vector<double> rates = random_rates(rng, 37);
    RateTree t(rates);
    for (int i = 0; i < 10000; ++i) {
        int idx = static_cast<int>(rng.below(37));
        double r = rng.uniform01() < 0.25 ? 0.0 : rng.range(0.0, 4.0);
        rates[static_cast<std::size_t>(idx)] = r;
        t.update(idx, r);
    }
    RateTree fresh(rates);
    double direct = 0;
    for (double r : rates) direct += r;
    CHECK(std::fabs(t.total() - direct) <= 1e-9 * std::max(1.0, direct));
    CHECK(t.max_child_sum_error() <= 1e-9);
    for (double q : {0.001, 0.1, 0.37, 0.5, 0.77, 0.999})
        CHECK(t.select(q) == fresh.select(q));
}

TEST_CASE("tree and linear scan pick identical components on random inputs") {
    RandomStream rng = RandomStream::keyed(5, 2);
    int trials = 20000;
    for (int trial = 0; trial < trials; ++trial) {
        int n = 1 + static_cast<int>(rng.below(64));
        auto rates = random_rates(rng, n);
        RateTree t(rates);
        double q = rng.uniform01();
        if (q >= 1.0) q = 0.0;
        CHECK(t.select(q) == linear_scan_select(rates, q));
    }
}

TEST_CASE("tree frequencies match inclusion probabilities") {
    std::vector<double> rates{1.0, 2.0, 3.0, 4.0, 0.0, 6.0, 0.5, 3.5};
    double total = 0;
    for (double r : rates) total += r;
    RateTree t(rates);
    RandomStream rng = RandomStream::keyed(17, 3);
    const int n = 200000;
    std::vector<int> hits(rates.size(), 0);
    for (int i = 0; i < n; ++i) ++hits[static_cast<std::size_t>(t.select(rng.uniform01()))];
    for (std::size_t i = 0; i < rates.size(); ++i) {
        double p = rates[i] / total;
        double se = std::sqrt(p * (1 - p) / n);
        CHECK(std::fabs(static_cast<double>(hits[i]) / n - p) <= 4 * se + 1e-12);
    }
}

TEST_CASE("class table picks class by weight and member uniformly") {
    // One class, four members: member draw 0.6 lands on slot 2.
    RateClassTable one({1.0}, 4);
    for (int i = 0; i < 4; ++i) one.assign(i, 0);
    CHECK(one.select(0.3, 0.6) == 2);

    // Two classes with aggregate weights 2 and 3: q1 = 0.5 picks the second.
    RateClassTable two({1.0, 1.5}, 4);
    two.assign(0, 0);
    two.assign(1, 0); // class 0 weight = 1.0 * 2 = 2
    two.assign(2, 1);
    two.assign(3, 1); // class 1 weight = 1.5 * 2 = 3
    CHECK(two.class_of(two.select(0.5, 0.0)) == 1);

    RateClassTable empty({1.0, 2.0}, 3);
    CHECK_THROWS_AS(empty.select(0.5, 0.5), NoActiveComponents);
}

TEST_CASE("class move is an O(1) swap and an involution") {
    RateClassTable t({1.0, 2.0}, 1);
    t.assign(0, 0);
    t.move(0, 1); // sole member of its class
    CHECK(t.class_of(0) == 1);
    CHECK(t.members(0).empty());
    CHECK(t.members(1) == std::vector<int>{0});
    t.move(0, 0);
    CHECK(t.class_of(0) == 0); // back where it started

    // 10^4 random moves against a naive membership oracle.
    const int n = 50, k = 4;
    RateClassTable table({0.5, 1.0, 2.0, 4.0}, n);
    std::vector<std::set<int>> oracle(k);
    for (int i = 0; i < n; ++i) {
        table.assign(i, i % k);
        oracle[static_cast<std::size_t>(i % k)].insert(i);
    }
    RandomStream rng = RandomStream::keyed(23, 4);
    for (int step = 0; step < 10000; ++step) {
        int comp = static_cast<int>(rng.below(n));
        int cls = static_cast<int>(rng.below(k));
        oracle[static_cast<std::size_t>(table.class_of(comp))].erase(comp);
        oracle[static_cast<std::size_t>(cls)].insert(comp);
        table.move(comp, cls);
    }
    for (int c = 0; c < k; ++c) {
        auto m = table.members(c);
        std::set<int> got(m.begin(), m.end());
        CHECK(got.size() == m.size()); // no duplicates
        CHECK(got == oracle[static_cast<std::size_t>(c)]);
    }
    for (int i = 0; i < n; ++i) {
        auto m = table.members(table.class_of(i));
        CHECK(std::count(m.begin(), m.end(), i) == 1);
    }
}

TEST_CASE("class select inspects at most K slots") {
    const int k = 10, n = 1000;
    std::vector<double> rates(k);
    for (int c = 0; c < k; ++c) rates[static_cast<std::size_t>(c)] = 0.25 * (c + 1);
    RateClassTable t(rates, n);
    for (int i = 0; i < n; ++i) t.assign(i, i % k);
    RandomStream rng = RandomStream::keyed(31, 5);
    for (int i = 0; i < 1000; ++i) {
        auto before = t.counters().select_visits;
        t.select(rng.uniform01(), rng.uniform01());
        CHECK(t.counters().select_visits - before <= static_cast<std::uint64_t>(k));
    }
}

TEST_CASE("class select frequencies follow rate times population") {
    RateClassTable t({1.0, 3.0}, 6);
    // components 0..3 in class 0 (weight 4), 4..5 in class 1 (weight 6)
    for (int i = 0; i < 4; ++i) t.assign(i, 0);
    for (int i = 4; i < 6; ++i) t.assign(i, 1);
    double total = 1.0 * 4 + 3.0 * 2;
    RandomStream rng = RandomStream::keyed(37, 6);
    const int n = 1000000;
    std::vector<int> hits(6, 0);
    for (int i = 0; i < n; ++i) ++hits[static_cast<std::size_t>(t.select(rng.uniform01(), rng.uniform01()))];
    for (int i = 0; i < 6; ++i) {
        double p = (i < 4 ? 1.0 : 3.0) / total;
        double se = std::sqrt(p * (1 - p) / n);
        CHECK(std::fabs(static_cast<double>(hits[static_cast<std::size_t>(i)]) / n - p) <= 4 * se);
    }
}

TEST_CASE("uniformized polls accept in proportion to rate over bound") {
    std::vector<double> rates{0.0, 1.0, 1.0, 2.0};
    double r_star = 2.0;
    UniformizedSampler u(4, r_star);
    RandomStream rng = RandomStream::keyed(41, 7);
    const int polls = 200000;
    std::vector<int> fired(4, 0);
    for (int i = 0; i < polls; ++i) {
        auto p = u.poll([&](int c) { return rates[static_cast<std::size_t>(c)]; }, rng);
        if (p.accepted) ++fired[static_cast<std::size_t>(p.component)];
    }
    CHECK(fired[0] == 0); // zero-rate component never fires
    double total = 4.0;   // sum of rates
    double accepted = static_cast<double>(u.accepted());
    for (int i = 1; i < 4; ++i) {
        double p = rates[static_cast<std::size_t>(i)] / total;
        double se = std::sqrt(p * (1 - p) / accepted);
        CHECK(std::fabs(fired[static_cast<std::size_t>(i)] / accepted - p) <= 4 * se);
    }
    // Mean acceptance ratio = <r>/r_star.
    double expect = (total / 4.0) / r_star;
    double se = std::sqrt(expect * (1 - expect) / polls);
    CHECK(std::fabs(accepted / polls - expect) <= 4 * se);
}

TEST_CASE("uniformized poll with equal rates at the bound always accepts") {
    UniformizedSampler u(8, 1.5);
    RandomStream rng = RandomStream::keyed(43, 8);
    for (int i = 0; i < 5000; ++i) {
        auto p = u.poll([](int) { return 1.5; }, rng);
        CHECK(p.accepted);
    }
    UniformizedSampler v(2, 1.0);
    CHECK_THROWS_AS(v.poll([](int) { return 1.5; }, rng), std::logic_error);
}

TEST_CASE("corrupting a stored node breaks child-sum consistency") {
    RateTree t({1, 2, 3, 4});
    CHECK(t.max_child_sum_error() == 0.0);
    t.corrupt_node_for_testing(2, 0.5);
    CHECK(t.max_child_sum_error() > 1e-9);
}
