#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "mcsim/random.hpp"

namespace mcsim {

// Raised by selection when the aggregate rate is zero: nothing can fire.
struct NoActiveComponents : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DispenserCounters {
    std::uint64_t updates = 0;       // rate writes
    std::uint64_t node_writes = 0;   // tree nodes written by updates/rebuilds
    std::uint64_t selects = 0;       // delegation draws
    std::uint64_t select_visits = 0; // internal nodes / class slots inspected
    std::uint64_t rebuilds = 0;
};

// Reference delegation rule: with V_i the prefix sums of the rates and
// R = V_N, return the first i with R*q < V_i (equivalently V_{i-1} <= R*q).
// If rounding pushes R*q past every prefix, the last positive-rate component
// is returned.  Linear in N; the oracle the tree is checked against.
int linear_scan_select(std::span<const double> rates, double q);

// Binary sum tree over component rates.  Leaves are zero-padded to a power
// of two; every internal node stores the sum of its children.  Selection
// descends from the root steering by the left-child sums; updates rewrite
// the leaf-to-root path (exactly ceil(log2 N)+1 nodes).  Descent compares
// against the stored sums, so a periodic full rebuild bounds float drift.
class RateTree {
public:
    explicit RateTree(std::vector<double> rates);

    int size() const { return n_; }
    double rate(int i) const { return node_[static_cast<std::size_t>(leaf_base_ + i)]; }
    double total() const { return node_[1]; }

    void update(int i, double rate);
    int select(double q);

    const DispenserCounters& counters() const { return counters_; }
    void reset_counters() { counters_ = DispenserCounters{}; }

    // Number of updates between full rebuilds (drift bound).
    static constexpr std::uint64_t kRebuildPeriod = 1ull << 20;

    // Fault-injection hook for the verification harness: perturb one stored
    // node so consistency checks trip.  Never called by engines.
    void corrupt_node_for_testing(std::size_t node, double delta);

    // Internal-consistency probe: max relative |node - (left+right)|.
    double max_child_sum_error() const;

private:
    void rebuild();

    int n_ = 0;        // real components
    int leaf_base_ = 0; // index of leaf 0 in node_ (power of two)
    std::vector<double> node_; // 1-based heap layout, node_[1] is the root
    std::uint64_t updates_since_rebuild_ = 0;
    DispenserCounters counters_;
};

// Constant-time delegation for models whose rates take only K distinct
// values.  Components live in per-class member arrays; a component moves
// between classes by swap-with-last, so moves are O(1).  Selection draws the
// class with probability proportional to rate * population (at most K slots
// inspected), then a member uniformly.
class RateClassTable {
public:
    explicit RateClassTable(std::vector<double> class_rates, int n_components);

    int class_count() const { return static_cast<int>(class_rate_.size()); }
    double class_rate(int c) const { return class_rate_[static_cast<std::size_t>(c)]; }
    int class_of(int comp) const { return comp_class_[static_cast<std::size_t>(comp)]; }
    const std::vector<int>& members(int c) const { return members_[static_cast<std::size_t>(c)]; }
    double total() const;

    // Place a component for the first time / move it to a new class.
    void assign(int comp, int cls);
    void move(int comp, int cls);

    int select(double q_class, double q_member);

    const DispenserCounters& counters() const { return counters_; }
    void reset_counters() { counters_ = DispenserCounters{}; }

private:
    std::vector<double> class_rate_;
    std::vector<std::vector<int>> members_;
    std::vector<int> comp_class_; // -1 while unassigned
    std::vector<int> comp_pos_;
    DispenserCounters counters_;
};

// Uniformized sequential update: every component is polled at the shared
// bound rate r_star >= max_i r_i; a polled component fires with probability
// r_i / r_star, otherwise the poll is a no-change update.  Rejection keeps
// per-update cost constant at the price of wasted polls.
class UniformizedSampler {
public:
    UniformizedSampler(int n, double r_star);

    struct Poll {
        int component;
        bool accepted;
    };

    // rate_fn(i) -> current rate of component i.  Throws if any polled rate
    // exceeds the bound (contract violation).
    template <class RateFn>
    Poll poll(RateFn&& rate_fn, RandomStream& rng) {
        int comp = static_cast<int>(rng.below(static_cast<std::uint64_t>(n_)));
        double r = rate_fn(comp);
        if (r > r_star_)
            throw std::logic_error("UniformizedSampler: component rate exceeds the uniform bound");
        double coin = rng.uniform01();
        ++polls_;
        bool ok = coin < r / r_star_;
        if (ok) ++accepted_;
        return Poll{comp, ok};
    }

    // Waiting time between polls of the whole system.
    double step_time(RandomStream& rng) const { return rng.exp(r_star_ * n_); }

    double r_star() const { return r_star_; }
    std::uint64_t polls() const { return polls_; }
    std::uint64_t accepted() const { return accepted_; }

private:
    int n_;
    double r_star_;
    std::uint64_t polls_ = 0;
    std::uint64_t accepted_ = 0;
};

} // namespace mcsim
