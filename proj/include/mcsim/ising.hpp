#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "mcsim/dispenser.hpp"
#include "mcsim/random.hpp"

namespace mcsim::ising {

struct Params {
    double temperature = 1.0; // must be > 0
    double field = 0.0;
    double rate_scale = 1.0;  // must be > 0
};

// Metropolis flip rate: rate_scale * exp(-max(dE, 0) / T) with
// dE = 2 * spin * (neighbor_sum + field).  spin must be +/-1 and
// neighbor_sum one of {-4,-2,0,2,4}; anything else is rejected, as is a
// non-positive temperature or rate scale.
double flip_rate(int spin, int neighbor_sum, const Params& p);

// The rate depends only on (spin, neighbor_sum), which ranges over
// 2 * 5 = 10 combinations.  rate_class_index maps a combination to a
// stable slot in [0, 10); rate_class_table evaluates all ten rates.
int rate_class_index(int spin, int neighbor_sum);
std::array<double, 10> rate_class_table(const Params& p);

// Square lattice of +/-1 spins with periodic wraparound.  Sites are indexed
// row-major; every site has exactly four neighbors (North, East, South,
// West).  On a 2x2 lattice opposite directions reach the same site, and
// neighbor_sum counts that site twice; the neighbor relation stays
// symmetric with matching multiplicities.
class SpinLattice {
public:
    explicit SpinLattice(int side); // all spins +1; side >= 2

    int side() const { return side_; }
    int size() const { return side_ * side_; }
    int spin(int site) const { return s_[static_cast<std::size_t>(site)]; }
    void set_spin(int site, int value); // value must be +/-1
    void flip(int site) { s_[static_cast<std::size_t>(site)] = static_cast<std::int8_t>(-s_[static_cast<std::size_t>(site)]); }

    std::array<int, 4> neighbors(int site) const; // N, E, S, W
    int neighbor_sum(int site) const;             // with multiplicity
    int magnetization() const;                    // sum of all spins

    void randomize(RandomStream& rng); // iid fair +/-1 coins

    const std::vector<std::int8_t>& spins() const { return s_; }

private:
    int side_;
    std::vector<std::int8_t> s_;
};

struct Flip {
    double time; // continuous time (kmc) or 1-based update index (uniformized)
    int site;
    int new_spin;
};

enum class Variant { Tree, Class };

struct Trajectory {
    int side = 0;
    std::vector<Flip> flips;
    std::vector<std::int8_t> final_spins;
    double final_time = 0.0;    // horizon (kmc) or update count (uniformized)
    std::uint64_t polls = 0;    // uniformized: total update attempts
    std::uint64_t accepted = 0; // uniformized: accepted flips
    DispenserCounters counters; // kmc: delegation-structure counters
};

// Continuous-time flip dynamics: waiting times are exponential in the
// aggregate rate, the flipping site is delegated through either the sum
// tree or the ten-slot class table, and after each flip the rates of the
// flipped site and its four neighbors are rewritten (five updates, repeats
// included on lattices small enough for directions to coincide).
Trajectory run_dispenser_kmc(const SpinLattice& start, const Params& p,
                             double horizon, RandomStream& stream,
                             Variant variant);

// Discrete sequential random update at the uniform bound rate: each step
// polls a uniformly chosen site and flips it with probability
// rate / r_star, where r_star is the largest entry of the rate-class
// table.  Flip times record the 1-based update index.
Trajectory run_uniformized(const SpinLattice& start, const Params& p,
                           std::uint64_t update_count, RandomStream& stream);

// Magnetization before any flip and after each one: size flips + 1.
std::vector<int> magnetization_trace(const SpinLattice& start,
                                     const Trajectory& traj);

} // namespace mcsim::ising
