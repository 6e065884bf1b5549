#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "mcsim/dispenser.hpp"
#include "mcsim/event_core.hpp"
#include "mcsim/random.hpp"

namespace mcsim::telecom {

// Per-provider calling plan: a discounted in-network price and a regular
// out-of-network price.  A flat plan has the two equal; p_same may never
// exceed p_other.
struct Plan {
    double p_same = 0.0;
    double p_other = 0.0;
};

struct PlanConfig {
    Plan plan1; // provider 1
    Plan plan2; // provider 2
    double alpha = 1.0; // switch attempts per (month * dollar of bill gap)
};

// Customers, their provider subscriptions (1 or 2), and the sparse
// minutes-per-month calling volumes.  Volumes are directed (caller pays),
// stored with a reverse index so a subscription change can locate every
// customer whose bill references it.
class Market {
public:
    explicit Market(int customers); // everyone starts on provider 1

    int size() const { return n_; }
    int subscription(int customer) const;
    void set_subscription(int customer, int provider); // 1 or 2
    void add_call_volume(int caller, int callee, double minutes);

    // (callee, minutes) pairs customer i pays for.
    const std::vector<std::pair<int, double>>& outgoing(int i) const;
    // (caller, minutes) pairs that reference customer i's subscription.
    const std::vector<std::pair<int, double>>& incoming(int i) const;

    // Customers whose pull rate is rewritten when i switches: everyone
    // calling i or called by i, plus i itself.  Sorted, unique.
    std::vector<int> refresh_set(int i) const;

private:
    int n_;
    std::vector<int> sub_;
    std::vector<std::vector<std::pair<int, double>>> out_;
    std::vector<std::vector<std::pair<int, double>>> in_;
};

// Monthly bill of a customer under the given provider's plan: each outgoing
// minute is charged the discount price when the callee subscribes to that
// same provider, the regular price otherwise.
double bill(const Market& m, const PlanConfig& plans, int customer, int provider);

// Linear pull toward the cheaper provider: alpha * (current - alternative)
// when the alternative bill is strictly lower, exactly zero otherwise
// (ties count as satisfied).
double pull_rate(const Market& m, const PlanConfig& plans, int customer);

// The switch map: provider 1 becomes 2 and 2 becomes 1.
void switch_customer(Market& m, int customer);

// Fresh full scan counting customers with a positive pull rate.
long long unsatisfied_lazy(const Market& m, const PlanConfig& plans);

// {customers on provider 1, customers on provider 2}.
std::array<int, 2> market_shares(const Market& m);

struct SwitchEvent {
    double time;
    int customer;
    int new_provider;
};

enum class Delegation { Tree, Scan };

struct RunResult {
    std::vector<SwitchEvent> events;
    std::vector<int> final_subscriptions;
    bool quiesced = false;        // every customer satisfied, nothing left to do
    double quiescence_time = 0.0; // valid when quiesced
    double final_time = 0.0;
    std::uint64_t cross_checks = 0; // incremental-vs-fresh audits performed
    // (report instant, maintained unsatisfied count) samples.
    std::vector<std::pair<double, long long>> counter_reports;
    DispenserCounters counters; // delegation-structure counters (tree runs)
};

// Every kCrossCheckPeriod committed events (or steps), the engines audit the
// incrementally maintained bills, aggregate rate and unsatisfied counter
// against full recomputation and abort on drift.
inline constexpr std::uint64_t kCrossCheckPeriod = 1024;

// Event-driven dynamics: exponential waits at the aggregate pull rate and
// per-event delegation to one customer, through either the sum tree or the
// linear-scan reference.  Both delegations draw identically, so runs with
// the same seed are comparable event for event.  report_times (ascending)
// sample the maintained unsatisfied counter at those instants.
RunResult run_event_driven(const Market& start, const PlanConfig& plans,
                           double horizon, RandomStream& stream,
                           Delegation delegation = Delegation::Tree,
                           std::span<const double> report_times = {});

// Fixed-step baseline: every step flips one coin per unsatisfied customer
// with probability rate * dt (which must stay below 1), using rates frozen
// at the step start; switches land on the step boundary.
RunResult run_time_driven(const Market& start, const PlanConfig& plans,
                          double dt, double horizon, RandomStream& stream,
                          std::span<const double> report_times = {});

// Random sparse market: about avg_degree directed volume entries per
// customer, minutes uniform in [vol_lo, vol_hi], subscriptions fair coins.
Market random_sparse_market(int customers, double avg_degree, double vol_lo,
                            double vol_hi, RandomStream& stream);

} // namespace mcsim::telecom
