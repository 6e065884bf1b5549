#pragma once

#include <atomic>
#include <cstdint>
#include <optional>
#include <vector>

#include "mcsim/random.hpp"

// Ballistic deposition of unit-diameter disks falling vertically onto a
// periodic 1D substrate.  A falling disk stops at first contact with the
// substrate or a settled disk; landing heights are computed analytically.
// The substrate is split into equal sectors at least one diameter wide, so a
// landing query only ever inspects the target sector and its two neighbours.

namespace mcsim::deposition {

struct Particle {
    std::uint64_t m = 0; // deposit order
    double x = 0;        // center abscissa in [0, length)
    double z = 0;        // center height, >= 1/2
};

struct DepositionConfig {
    double length = 10.0; // substrate circumference
    int sectors = 10;     // equal sectors; length/sectors must be >= 1
};

// Height of the supporting contact between a disk falling at `x` and the
// settled disk `p`, or nullopt when their horizontal wrap-distance is a full
// diameter or more.  Both scan paths share this so they agree to the bit.
std::optional<double> contact_z(double length, double x, const Particle& p);

// Settled disks bucketed by sector.  Only the bucket owning an abscissa and
// its two ring neighbours can hold a disk within one diameter of it.
class SectorStore {
public:
    SectorStore(double length, int sectors);

    double length() const { return len_; }
    int sectors() const { return s_; }
    int sector_of(double x) const;
    std::uint64_t count() const { return count_.load(std::memory_order_relaxed); }

    // Landing height for a disk dropped at x: scans three sectors.
    double landing_height(double x) const;
    // Same result from scanning every settled disk (reference path).
    double landing_height_fullscan(double x) const;

    void add(const Particle& p);
    const std::vector<Particle>& sector(int s) const {
        return bins_[static_cast<std::size_t>(s)];
    }

private:
    double len_;
    int s_;
    double width_;
    // Concurrent sector owners may add simultaneously (the parallel engines
    // guarantee disjoint sectors); only the total needs synchronizing.
    std::atomic<std::uint64_t> count_{0};
    std::vector<std::vector<Particle>> bins_;
};

struct Trajectory {
    double length = 0;
    std::vector<Particle> particles; // deposit order; m is the index
    std::vector<double> times;       // arrival times; empty for count-driven runs
};

// Deposit exactly M disks, the abscissa of each drawn uniformly over the
// substrate.  Heights use the sectorized scan.
Trajectory deposit_sequential(const DepositionConfig& cfg, std::uint64_t particles,
                              RandomStream& stream);

// Continuous-time variant: arrivals form a Poisson stream whose rate is one
// per sector (aggregate rate = sector count), abscissas again uniform.  Runs
// until the horizon; records the arrival time of every disk.
Trajectory deposit_sequential_ct(const DepositionConfig& cfg, double horizon,
                                 RandomStream& stream);

struct GeometryReport {
    std::uint64_t overlap_violations = 0; // center pairs closer than 1 - tol
    std::uint64_t support_violations = 0; // raised disks with no touching support
    double min_pair_distance = 0;         // over all pairs within a diameter in x
};

// Check the packing invariants of a finished trajectory: no two centers
// closer than one diameter, every raised disk rests on a strictly lower one,
// every substrate-level disk sits at exactly z = 1/2.
GeometryReport verify_geometry(const Trajectory& traj, int sectors, double tol = 1e-9);

struct DensityProfile {
    std::size_t height_bins = 0;
    std::size_t time_bins = 0;
    double height_max = 0;          // top edge of the height axis (z - 1/2)
    std::vector<double> counts;     // row-major [height][time] raw counts
    std::vector<double> density;    // counts / (bin height * substrate length)
    double mass() const;
};

// Histogram of deposited mass over (height, arrival) bins.  The time axis is
// arrival time when the trajectory records times, deposit index otherwise.
DensityProfile density_profile(const Trajectory& traj, std::size_t height_bins,
                               std::size_t time_bins);

} // namespace mcsim::deposition
