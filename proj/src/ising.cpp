#include "mcsim/ising.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mcsim::ising {

namespace {

void check_params(const Params& p) {
    if (!(p.temperature > 0.0))
        throw std::invalid_argument("ising: temperature must be positive");
    if (!(p.rate_scale > 0.0))
        throw std::invalid_argument("ising: rate_scale must be positive");
    if (!std::isfinite(p.field))
        throw std::invalid_argument("ising: field must be finite");
}

void check_inputs(int spin, int neighbor_sum) {
    if (spin != 1 && spin != -1)
        throw std::invalid_argument("ising: spin must be +1 or -1");
    if (neighbor_sum < -4 || neighbor_sum > 4 || neighbor_sum % 2 != 0)
        throw std::invalid_argument("ising: neighbor sum must be in {-4,-2,0,2,4}");
}

} // namespace

double flip_rate(int spin, int neighbor_sum, const Params& p) {
    check_params(p);
    check_inputs(spin, neighbor_sum);
    double de = 2.0 * spin * (neighbor_sum + p.field);
    if (de <= 0.0) return p.rate_scale;
    return p.rate_scale * std::exp(-de / p.temperature);
}

int rate_class_index(int spin, int neighbor_sum) {
    check_inputs(spin, neighbor_sum);
    return (spin > 0 ? 0 : 5) + (neighbor_sum + 4) / 2;
}

std::array<double, 10> rate_class_table(const Params& p) {
    check_params(p);
    std::array<double, 10> table{};
    for (int spin : {1, -1})
        for (int k = -4; k <= 4; k += 2)
            table[static_cast<std::size_t>(rate_class_index(spin, k))] =
                flip_rate(spin, k, p);
    return table;
}

SpinLattice::SpinLattice(int side) : side_(side) {
    if (side < 2)
        throw std::invalid_argument("SpinLattice: side must be at least 2");
    s_.assign(static_cast<std::size_t>(side) * static_cast<std::size_t>(side), 1);
}

void SpinLattice::set_spin(int site, int value) {
    if (value != 1 && value != -1)
        throw std::invalid_argument("SpinLattice: spin must be +1 or -1");
    s_[static_cast<std::size_t>(site)] = static_cast<std::int8_t>(value);
}

std::array<int, 4> SpinLattice::neighbors(int site) const {
    int r = site / side_;
    int c = site % side_;
    int up = (r == 0 ? side_ - 1 : r - 1);
    int down = (r == side_ - 1 ? 0 : r + 1);
    int right = (c == side_ - 1 ? 0 : c + 1);
    int left = (c == 0 ? side_ - 1 : c - 1);
    return {up * side_ + c, r * side_ + right, down * side_ + c, r * side_ + left};
}

int SpinLattice::neighbor_sum(int site) const {
    int sum = 0;
    for (int j : neighbors(site)) sum += s_[static_cast<std::size_t>(j)];
    return sum;
}

int SpinLattice::magnetization() const {
    int m = 0;
    for (std::int8_t v : s_) m += v;
    return m;
}

void SpinLattice::randomize(RandomStream& rng) {
    for (auto& v : s_) v = (rng.next_u64() & 1u) ? std::int8_t{1} : std::int8_t{-1};
}

namespace {

// Shared continuous-time loop; Selector wraps either delegation structure.
template <class Selector>
Trajectory run_kmc_core(const SpinLattice& start, double horizon,
                        RandomStream& stream, Selector& sel) {
    SpinLattice lat = start;
    Trajectory traj;
    traj.side = lat.side();
    traj.final_time = horizon;

    double t = 0.0;
    for (;;) {
        double total = sel.total();
        t += stream.exp(total);
        if (!(t <= horizon)) break;
        int site = sel.pick(stream);
        lat.flip(site);
        traj.flips.push_back({t, site, lat.spin(site)});
        // The flip changes the rate of the site itself and of each of its
        // four neighbors; rewrite all five, repeats included, so the cost
        // per flip is the same on every lattice.
        sel.set(site, lat);
        for (int j : lat.neighbors(site)) sel.set(j, lat);
    }

    traj.final_spins = lat.spins();
    traj.counters = sel.counters();
    return traj;
}

struct TreeSelector {
    RateTree tree;
    const Params& p;

    TreeSelector(const SpinLattice& lat, const Params& params)
        : tree(initial_rates(lat, params)), p(params) {}

    static std::vector<double> initial_rates(const SpinLattice& lat, const Params& params) {
        std::vector<double> r(static_cast<std::size_t>(lat.size()));
        for (int i = 0; i < lat.size(); ++i)
            r[static_cast<std::size_t>(i)] = flip_rate(lat.spin(i), lat.neighbor_sum(i), params);
        return r;
    }

    double total() const { return tree.total(); }
    int pick(RandomStream& stream) { return tree.select(stream.uniform01()); }
    void set(int site, const SpinLattice& lat) {
        tree.update(site, flip_rate(lat.spin(site), lat.neighbor_sum(site), p));
    }
    const DispenserCounters& counters() const { return tree.counters(); }
};

struct ClassSelector {
    RateClassTable table;

    ClassSelector(const SpinLattice& lat, const Params& params)
        : table(std::vector<double>(rate_class_table(params).begin(),
                                    rate_class_table(params).end()),
                lat.size()) {
        for (int i = 0; i < lat.size(); ++i)
            table.assign(i, rate_class_index(lat.spin(i), lat.neighbor_sum(i)));
    }

    double total() const { return table.total(); }
    int pick(RandomStream& stream) {
        double qc = stream.uniform01();
        double qm = stream.uniform01();
        return table.select(qc, qm);
    }
    void set(int site, const SpinLattice& lat) {
        table.move(site, rate_class_index(lat.spin(site), lat.neighbor_sum(site)));
    }
    const DispenserCounters& counters() const { return table.counters(); }
};

} // namespace

Trajectory run_dispenser_kmc(const SpinLattice& start, const Params& p,
                             double horizon, RandomStream& stream,
                             Variant variant) {
    check_params(p);
    if (variant == Variant::Tree) {
        TreeSelector sel(start, p);
        return run_kmc_core(start, horizon, stream, sel);
    }
    ClassSelector sel(start, p);
    return run_kmc_core(start, horizon, stream, sel);
}

Trajectory run_uniformized(const SpinLattice& start, const Params& p,
                           std::uint64_t update_count, RandomStream& stream) {
    check_params(p);
    SpinLattice lat = start;
    Trajectory traj;
    traj.side = lat.side();
    traj.final_time = static_cast<double>(update_count);

    auto table = rate_class_table(p);
    double r_star = *std::max_element(table.begin(), table.end());
    UniformizedSampler sampler(lat.size(), r_star);

    auto rate_of = [&](int site) {
        return table[static_cast<std::size_t>(
            rate_class_index(lat.spin(site), lat.neighbor_sum(site)))];
    };
    for (std::uint64_t m = 1; m <= update_count; ++m) {
        auto poll = sampler.poll(rate_of, stream);
        if (poll.accepted) {
            lat.flip(poll.component);
            traj.flips.push_back({static_cast<double>(m), poll.component,
                                  lat.spin(poll.component)});
        }
    }

    traj.final_spins = lat.spins();
    traj.polls = sampler.polls();
    traj.accepted = sampler.accepted();
    return traj;
}

std::vector<int> magnetization_trace(const SpinLattice& start,
                                     const Trajectory& traj) {
    std::vector<int> trace;
    trace.reserve(traj.flips.size() + 1);
    int m = start.magnetization();
    trace.push_back(m);
    for (const Flip& f : traj.flips) {
        m += 2 * f.new_spin;
        trace.push_back(m);
    }
    return trace;
}

} // namespace mcsim::ising
