#pragma once

#include <cstdint>

namespace mcsim {

// Counter-based pseudorandom stream.  Draw number k of stream (seed, hi, lo)
// is a pure function of (seed, hi, lo, k), so independent engines can replay
// one another's draws without sharing generator state: a parallel worker that
// owns component i reproduces exactly the draws a sequential run made for i.
class RandomStream {
public:
    RandomStream() = default;

    // Derive a stream key from a run seed and a two-part stream id.
    static RandomStream keyed(std::uint64_t seed, std::uint64_t hi, std::uint64_t lo = 0);

    std::uint64_t next_u64();

    // Strictly inside (0,1); zero words are re-drawn, 1.0 is unreachable.
    double uniform01();

    // Exponential waiting time with the given rate (> 0).
    double exp(double rate);

    // Uniform integer in [0, n), n > 0.
    std::uint64_t below(std::uint64_t n);

    // Uniform real in [lo, hi).
    double range(double lo, double hi);

    std::uint64_t counter() const { return counter_; }

private:
    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
};

// Pure inversion used by exp(); exposed so tests can pin exact values.
// q must lie in (0,1), rate must be positive.
double exp_from_uniform(double q, double rate);

// 64-bit avalanche mix (SplitMix64 finalizer).
std::uint64_t mix64(std::uint64_t x);

} // namespace mcsim
