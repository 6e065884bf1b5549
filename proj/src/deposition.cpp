#include "mcsim/deposition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mcsim::deposition {

std::optional<double> contact_z(double length, double x, const Particle& p) {
    double d = std::fabs(x - p.x);
    if (d > length - d) d = length - d; // periodic wrap
    if (!(d < 1.0)) return std::nullopt;
    return p.z + std::sqrt(1.0 - d * d);
}

SectorStore::SectorStore(double length, int sectors)
    : len_(length), s_(sectors), width_(length / sectors) {
    if (!(length > 0)) throw std::invalid_argument("deposition: length must be positive");
    if (sectors <= 0) throw std::invalid_argument("deposition: sector count must be positive");
    if (width_ < 1.0)
        throw std::invalid_argument(
            "deposition: sector width below one disk diameter breaks the "
            "adjacent-sector lookup");
    bins_.resize(static_cast<std::size_t>(sectors));
}

int SectorStore::sector_of(double x) const {
    int s = static_cast<int>(x / width_);
    if (s >= s_) s = s_ - 1; // guard the x == length float edge
    if (s < 0) s = 0;
    return s;
}

double SectorStore::landing_height(double x) const {
    double z = 0.5;
    int home = sector_of(x);
    int scan[3] = {(home + s_ - 1) % s_, home, (home + 1) % s_};
    for (int k = 0; k < 3; ++k) {
        bool seen = false; // one- and two-sector rings fold neighbours together
        for (int j = 0; j < k; ++j) seen = seen || scan[j] == scan[k];
        if (seen) continue;
        for (const Particle& p : bins_[static_cast<std::size_t>(scan[k])]) {
            auto c = contact_z(len_, x, p);
            if (c && *c > z) z = *c;
        }
    }
    return z;
}

double SectorStore::landing_height_fullscan(double x) const {
    double z = 0.5;
    for (const auto& bin : bins_)
        for (const Particle& p : bin) {
            auto c = contact_z(len_, x, p);
            if (c && *c > z) z = *c;
        }
    return z;
}

void SectorStore::add(const Particle& p) {
    bins_[static_cast<std::size_t>(sector_of(p.x))].push_back(p);
    count_.fetch_add(1, std::memory_order_relaxed);
}

Trajectory deposit_sequential(const DepositionConfig& cfg, std::uint64_t particles,
                              RandomStream& stream) {
    SectorStore store(cfg.length, cfg.sectors);
    Trajectory traj;
    traj.length = cfg.length;
    traj.particles.reserve(particles);
    for (std::uint64_t m = 0; m < particles; ++m) {
        double x = stream.uniform01() * cfg.length;
        Particle p{m, x, store.landing_height(x)};
        store.add(p);
        traj.particles.push_back(p);
    }
    return traj;
}

Trajectory deposit_sequential_ct(const DepositionConfig& cfg, double horizon,
                                 RandomStream& stream) {
    if (!(horizon >= 0)) throw std::invalid_argument("deposition: horizon must be nonnegative");
    SectorStore store(cfg.length, cfg.sectors);
    Trajectory traj;
    traj.length = cfg.length;
    double rate = static_cast<double>(cfg.sectors); // one arrival per sector per unit time
    double t = 0;
    std::uint64_t m = 0;
    for (;;) {
        t += exp_from_uniform(stream.uniform01(), rate);
        if (t > horizon) break;
        double x = stream.uniform01() * cfg.length;
        Particle p{m++, x, store.landing_height(x)};
        store.add(p);
        traj.particles.push_back(p);
        traj.times.push_back(t);
    }
    return traj;
}

GeometryReport verify_geometry(const Trajectory& traj, int sectors, double tol) {
    GeometryReport rep;
    rep.min_pair_distance = std::numeric_limits<double>::infinity();
    SectorStore store(traj.length, sectors);
    for (const Particle& q : traj.particles) {
        bool supported = false;
        if (q.z <= 0.5 + tol) {
            supported = std::fabs(q.z - 0.5) <= tol; // rests on the substrate
        }
        int home = store.sector_of(q.x);
        int scan[3] = {(home + store.sectors() - 1) % store.sectors(), home,
                       (home + 1) % store.sectors()};
        for (int k = 0; k < 3; ++k) {
            bool seen = false;
            for (int j = 0; j < k; ++j) seen = seen || scan[j] == scan[k];
            if (seen) continue;
            for (const Particle& p : store.sector(scan[k])) {
                double dx = std::fabs(q.x - p.x);
                if (dx > traj.length - dx) dx = traj.length - dx;
                if (dx >= 1.0 + tol) continue;
                double dist = std::hypot(dx, q.z - p.z);
                rep.min_pair_distance = std::min(rep.min_pair_distance, dist);
                if (dist < 1.0 - tol) ++rep.overlap_violations;
                if (p.z < q.z && std::fabs(dist - 1.0) <= tol) supported = true;
            }
        }
        if (!supported) ++rep.support_violations;
        store.add(q);
    }
    return rep;
}

double DensityProfile::mass() const {
    double m = 0;
    for (double c : counts) m += c;
    return m;
}

DensityProfile density_profile(const Trajectory& traj, std::size_t height_bins,
                               std::size_t time_bins) {
    if (traj.particles.empty())
        throw std::invalid_argument("density_profile: empty trajectory");
    if (height_bins == 0 || time_bins == 0)
        throw std::invalid_argument("density_profile: bin counts must be positive");

    DensityProfile prof;
    prof.height_bins = height_bins;
    prof.time_bins = time_bins;

    double h_max = 0;
    for (const Particle& p : traj.particles) h_max = std::max(h_max, p.z - 0.5);
    prof.height_max = h_max > 0 ? h_max : 1.0;

    bool timed = !traj.times.empty();
    double t_max = timed ? traj.times.back()
                         : static_cast<double>(traj.particles.size());
    if (t_max <= 0) t_max = 1.0;

    prof.counts.assign(height_bins * time_bins, 0.0);
    for (std::size_t i = 0; i < traj.particles.size(); ++i) {
        double h = traj.particles[i].z - 0.5;
        double t = timed ? traj.times[i] : static_cast<double>(i);
        auto hb = static_cast<std::size_t>(h / prof.height_max * static_cast<double>(height_bins));
        auto tb = static_cast<std::size_t>(t / t_max * static_cast<double>(time_bins));
        if (hb >= height_bins) hb = height_bins - 1;
        if (tb >= time_bins) tb = time_bins - 1;
        prof.counts[hb * time_bins + tb] += 1.0;
    }

    double bin_height = prof.height_max / static_cast<double>(height_bins);
    prof.density.resize(prof.counts.size());
    for (std::size_t i = 0; i < prof.counts.size(); ++i)
        prof.density[i] = prof.counts[i] / (bin_height * traj.length);
    return prof;
}

} // namespace mcsim::deposition
