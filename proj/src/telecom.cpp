#include "mcsim/telecom.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <optional>
#include <stdexcept>

namespace mcsim::telecom {

namespace {

void check_plans(const PlanConfig& plans) {
    for (const Plan& p : {plans.plan1, plans.plan2}) {
        if (!(p.p_same >= 0.0) || !(p.p_other >= 0.0))
            throw std::invalid_argument("telecom: prices must be nonnegative");
        if (p.p_same > p.p_other)
            throw std::invalid_argument("telecom: in-network price may not exceed the regular price");
    }
    if (!(plans.alpha >= 0.0))
        throw std::invalid_argument("telecom: alpha must be nonnegative");
}

void check_customer(const Market& m, int customer) {
    if (customer < 0 || customer >= m.size())
        throw std::invalid_argument("telecom: customer index out of range");
}

} // namespace

Market::Market(int customers) : n_(customers) {
    if (customers < 1) throw std::invalid_argument("Market: need at least one customer");
    sub_.assign(static_cast<std::size_t>(customers), 1);
    out_.resize(static_cast<std::size_t>(customers));
    in_.resize(static_cast<std::size_t>(customers));
}

int Market::subscription(int customer) const {
    check_customer(*this, customer);
    return sub_[static_cast<std::size_t>(customer)];
}

void Market::set_subscription(int customer, int provider) {
    check_customer(*this, customer);
    if (provider != 1 && provider != 2)
        throw std::invalid_argument("Market: provider must be 1 or 2");
    sub_[static_cast<std::size_t>(customer)] = provider;
}

void Market::add_call_volume(int caller, int callee, double minutes) {
    check_customer(*this, caller);
    check_customer(*this, callee);
    if (caller == callee)
        throw std::invalid_argument("Market: self-calls carry no volume");
    if (!(minutes > 0.0))
        throw std::invalid_argument("Market: call volume must be positive");
    auto& out = out_[static_cast<std::size_t>(caller)];
    for (auto& [j, v] : out) {
        if (j == callee) { // accumulate repeated declarations
            v += minutes;
            for (auto& [i, w] : in_[static_cast<std::size_t>(callee)])
                if (i == caller) w += minutes;
            return;
        }
    }
    out.emplace_back(callee, minutes);
    in_[static_cast<std::size_t>(callee)].emplace_back(caller, minutes);
}

const std::vector<std::pair<int, double>>& Market::outgoing(int i) const {
    check_customer(*this, i);
    return out_[static_cast<std::size_t>(i)];
}

const std::vector<std::pair<int, double>>& Market::incoming(int i) const {
    check_customer(*this, i);
    return in_[static_cast<std::size_t>(i)];
}

std::vector<int> Market::refresh_set(int i) const {
    check_customer(*this, i);
    std::vector<int> set;
    set.reserve(out_[static_cast<std::size_t>(i)].size() +
                in_[static_cast<std::size_t>(i)].size() + 1);
    set.push_back(i);
    for (const auto& [j, v] : out_[static_cast<std::size_t>(i)]) set.push_back(j);
    for (const auto& [j, v] : in_[static_cast<std::size_t>(i)]) set.push_back(j);
    std::sort(set.begin(), set.end());
    set.erase(std::unique(set.begin(), set.end()), set.end());
    return set;
}

double bill(const Market& m, const PlanConfig& plans, int customer, int provider) {
    check_plans(plans);
    check_customer(m, customer);
    if (provider != 1 && provider != 2)
        throw std::invalid_argument("telecom: provider must be 1 or 2");
    const Plan& pl = provider == 1 ? plans.plan1 : plans.plan2;
    double total = 0.0;
    for (const auto& [j, v] : m.outgoing(customer))
        total += v * (m.subscription(j) == provider ? pl.p_same : pl.p_other);
    return total;
}

double pull_rate(const Market& m, const PlanConfig& plans, int customer) {
    int cur = m.subscription(customer);
    double b_cur = bill(m, plans, customer, cur);
    double b_alt = bill(m, plans, customer, 3 - cur);
    return b_alt < b_cur ? plans.alpha * (b_cur - b_alt) : 0.0;
}

void switch_customer(Market& m, int customer) {
    m.set_subscription(customer, 3 - m.subscription(customer));
}

long long unsatisfied_lazy(const Market& m, const PlanConfig& plans) {
    long long count = 0;
    for (int i = 0; i < m.size(); ++i)
        if (pull_rate(m, plans, i) > 0.0) ++count;
    return count;
}

std::array<int, 2> market_shares(const Market& m) {
    std::array<int, 2> shares{0, 0};
    for (int i = 0; i < m.size(); ++i)
        ++shares[static_cast<std::size_t>(m.subscription(i) - 1)];
    return shares;
}

namespace {

// Incrementally maintained view of the market: cached bills under both
// providers, per-customer pull rates, their running sum, and the count of
// unsatisfied customers.  Periodically audited against full recomputation.
struct EngineState {
    const PlanConfig& plans;
    Market market;
    std::vector<double> bill1, bill2;
    std::vector<double> rate;
    double total_rate = 0.0;
    MaintainedCounter unsatisfied;
    std::uint64_t cross_checks = 0;

    EngineState(const Market& start, const PlanConfig& p) : plans(p), market(start) {
        int n = market.size();
        bill1.resize(static_cast<std::size_t>(n));
        bill2.resize(static_cast<std::size_t>(n));
        rate.resize(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            bill1[static_cast<std::size_t>(i)] = bill(market, plans, i, 1);
            bill2[static_cast<std::size_t>(i)] = bill(market, plans, i, 2);
        }
        for (int i = 0; i < n; ++i) {
            double r = rate_from_bills(i);
            rate[static_cast<std::size_t>(i)] = r;
            total_rate += r;
            if (r > 0.0) unsatisfied.apply(1);
        }
    }

    double rate_from_bills(int i) const {
        double cur = market.subscription(i) == 1 ? bill1[static_cast<std::size_t>(i)]
                                                 : bill2[static_cast<std::size_t>(i)];
        double alt = market.subscription(i) == 1 ? bill2[static_cast<std::size_t>(i)]
                                                 : bill1[static_cast<std::size_t>(i)];
        return alt < cur ? plans.alpha * (cur - alt) : 0.0;
    }

    void set_rate(int i, double r) {
        double old = rate[static_cast<std::size_t>(i)];
        rate[static_cast<std::size_t>(i)] = r;
        total_rate += r - old;
        unsatisfied.apply((r > 0.0 ? 1 : 0) - (old > 0.0 ? 1 : 0));
    }

    // Flip the subscription and adjust the cached bills of every caller,
    // whose charges for minutes toward i change price bracket.
    void apply_switch(int i) {
        int olds = market.subscription(i);
        int news = 3 - olds;
        market.set_subscription(i, news);
        double d1 = (news == 1 ? plans.plan1.p_same : plans.plan1.p_other) -
                    (olds == 1 ? plans.plan1.p_same : plans.plan1.p_other);
        double d2 = (news == 2 ? plans.plan2.p_same : plans.plan2.p_other) -
                    (olds == 2 ? plans.plan2.p_same : plans.plan2.p_other);
        for (const auto& [j, v] : market.incoming(i)) {
            bill1[static_cast<std::size_t>(j)] += v * d1;
            bill2[static_cast<std::size_t>(j)] += v * d2;
        }
    }

    void cross_check() {
        ++cross_checks;
        double fresh_total = 0.0;
        long long fresh_unsat = 0;
        for (int i = 0; i < market.size(); ++i) {
            double f1 = bill(market, plans, i, 1);
            double f2 = bill(market, plans, i, 2);
            if (std::fabs(bill1[static_cast<std::size_t>(i)] - f1) >
                    1e-9 * std::max(1.0, std::fabs(f1)) ||
                std::fabs(bill2[static_cast<std::size_t>(i)] - f2) >
                    1e-9 * std::max(1.0, std::fabs(f2)))
                throw std::logic_error("telecom: cached bill drifted from full recomputation");
            double r = rate[static_cast<std::size_t>(i)];
            fresh_total += r;
            if (r > 0.0) ++fresh_unsat;
        }
        if (std::fabs(total_rate - fresh_total) > 1e-9 * std::max(1.0, fresh_total))
            throw std::logic_error("telecom: running aggregate rate drifted from its parts");
        if (fresh_unsat != unsatisfied.value())
            throw std::logic_error("telecom: maintained unsatisfied count disagrees with scan");
    }
};

void check_reports(std::span<const double> report_times) {
    for (std::size_t i = 1; i < report_times.size(); ++i)
        if (report_times[i] < report_times[i - 1])
            throw std::invalid_argument("telecom: report instants must be ascending");
}

} // namespace

RunResult run_event_driven(const Market& start, const PlanConfig& plans,
                           double horizon, RandomStream& stream,
                           Delegation delegation,
                           std::span<const double> report_times) {
    check_plans(plans);
    check_reports(report_times);
    if (!(horizon >= 0.0))
        throw std::invalid_argument("telecom: horizon must be nonnegative");

    EngineState st(start, plans);
    std::optional<RateTree> tree;
    if (delegation == Delegation::Tree) tree.emplace(st.rate);

    RunResult res;
    res.final_time = horizon;
    std::size_t ri = 0;
    auto flush_before = [&](double upto) {
        while (ri < report_times.size() && report_times[ri] < upto &&
               report_times[ri] <= horizon) {
            res.counter_reports.emplace_back(report_times[ri], st.unsatisfied.value());
            ++ri;
        }
    };

    double t = 0.0;
    for (;;) {
        if (st.unsatisfied.value() == 0) {
            res.quiesced = true;
            res.quiescence_time = t;
            break;
        }
        double next = t + stream.exp(st.total_rate);
        if (!(next <= horizon)) break;
        t = next;
        double q = stream.uniform01();
        int i = delegation == Delegation::Tree ? tree->select(q)
                                               : linear_scan_select(st.rate, q);
        flush_before(t); // instants strictly before the event see the old state
        res.events.push_back({t, i, 3 - st.market.subscription(i)});
        st.apply_switch(i);
        for (int j : st.market.refresh_set(i)) {
            st.set_rate(j, st.rate_from_bills(j));
            if (tree) tree->update(j, st.rate[static_cast<std::size_t>(j)]);
        }
        if (res.events.size() % kCrossCheckPeriod == 0) st.cross_check();
    }

    while (ri < report_times.size() && report_times[ri] <= horizon) {
        res.counter_reports.emplace_back(report_times[ri], st.unsatisfied.value());
        ++ri;
    }
    res.final_subscriptions.resize(static_cast<std::size_t>(st.market.size()));
    for (int i = 0; i < st.market.size(); ++i)
        res.final_subscriptions[static_cast<std::size_t>(i)] = st.market.subscription(i);
    res.cross_checks = st.cross_checks;
    if (tree) res.counters = tree->counters();
    return res;
}

RunResult run_time_driven(const Market& start, const PlanConfig& plans,
                          double dt, double horizon, RandomStream& stream,
                          std::span<const double> report_times) {
    check_plans(plans);
    check_reports(report_times);
    if (!(horizon >= 0.0))
        throw std::invalid_argument("telecom: horizon must be nonnegative");

    EngineState st(start, plans);
    RunResult res;
    res.final_time = horizon;
    std::size_t ri = 0;
    std::uint64_t steps = 0;
    double prev = 0.0;
    std::vector<int> switchers;
    std::vector<int> refresh;

    timedriven_run(dt, horizon, [&](double te) {
        while (ri < report_times.size() && report_times[ri] < te) {
            res.counter_reports.emplace_back(report_times[ri], st.unsatisfied.value());
            ++ri;
        }
        double span = te - prev;
        prev = te;
        switchers.clear();
        for (int i = 0; i < st.market.size(); ++i) {
            double r = st.rate[static_cast<std::size_t>(i)];
            if (r <= 0.0) continue;
            double pr = r * span;
            if (pr >= 1.0)
                throw std::invalid_argument("telecom: rate * dt must stay below 1");
            if (stream.uniform01() < pr) switchers.push_back(i);
        }
        if (!switchers.empty()) {
            refresh.clear();
            for (int i : switchers) {
                res.events.push_back({te, i, 3 - st.market.subscription(i)});
                st.apply_switch(i);
                auto set = st.market.refresh_set(i);
                refresh.insert(refresh.end(), set.begin(), set.end());
            }
            std::sort(refresh.begin(), refresh.end());
            refresh.erase(std::unique(refresh.begin(), refresh.end()), refresh.end());
            for (int j : refresh) st.set_rate(j, st.rate_from_bills(j));
        }
        if (!res.quiesced && st.unsatisfied.value() == 0) {
            res.quiesced = true;
            res.quiescence_time = te;
        }
        if (++steps % kCrossCheckPeriod == 0) st.cross_check();
        while (ri < report_times.size() && report_times[ri] == te) {
            res.counter_reports.emplace_back(report_times[ri], st.unsatisfied.value());
            ++ri;
        }
    });

    if (st.unsatisfied.value() == 0 && !res.quiesced) {
        res.quiesced = true; // zero-step window with nothing pending
        res.quiescence_time = 0.0;
    }
    while (ri < report_times.size() && report_times[ri] <= horizon) {
        res.counter_reports.emplace_back(report_times[ri], st.unsatisfied.value());
        ++ri;
    }
    res.final_subscriptions.resize(static_cast<std::size_t>(st.market.size()));
    for (int i = 0; i < st.market.size(); ++i)
        res.final_subscriptions[static_cast<std::size_t>(i)] = st.market.subscription(i);
    res.cross_checks = st.cross_checks;
    return res;
}

Market random_sparse_market(int customers, double avg_degree, double vol_lo,
                            double vol_hi, RandomStream& stream) {
    if (customers < 2)
        throw std::invalid_argument("random_sparse_market: need at least two customers");
    if (!(avg_degree >= 0.0))
        throw std::invalid_argument("random_sparse_market: average degree must be nonnegative");
    if (!(vol_lo > 0.0) || !(vol_hi >= vol_lo))
        throw std::invalid_argument("random_sparse_market: volume range must be positive and ordered");
    Market m(customers);
    auto n = static_cast<std::uint64_t>(customers);
    auto edges = static_cast<std::uint64_t>(std::llround(avg_degree * customers));
    for (std::uint64_t e = 0; e < edges; ++e) {
        int i = static_cast<int>(stream.below(n));
        int j = static_cast<int>(stream.below(n));
        while (j == i) j = static_cast<int>(stream.below(n));
        double v = vol_lo + stream.uniform01() * (vol_hi - vol_lo);
        m.add_call_volume(i, j, v);
    }
    for (int i = 0; i < customers; ++i)
        m.set_subscription(i, 1 + static_cast<int>(stream.below(2)));
    return m;
}

} // namespace mcsim::telecom
