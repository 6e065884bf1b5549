#include "mcsim/random.hpp"

#include <cmath>
#include <stdexcept>

namespace mcsim {

namespace {
constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;
}

std::uint64_t mix64(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ull;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBull;
    x ^= x >> 31;
    return x;
}

RandomStream RandomStream::keyed(std::uint64_t seed, std::uint64_t hi, std::uint64_t lo) {
    RandomStream s;
    s.key_ = mix64(mix64(seed + kGamma) ^ (hi * 0xC2B2AE3D27D4EB4Full)) ^ (lo * 0x165667B19E3779F9ull);
    s.key_ = mix64(s.key_);
    s.counter_ = 0;
    return s;
}

std::uint64_t RandomStream::next_u64() {
    counter_ += 1;
    return mix64(key_ + counter_ * kGamma);
}

double RandomStream::uniform01() {
    std::uint64_t bits;
    do {
        bits = next_u64() >> 11; // 53 significant bits
    } while (bits == 0);
    return static_cast<double>(bits) * 0x1.0p-53;
}

double RandomStream::exp(double rate) {
    return exp_from_uniform(uniform01(), rate);
}

std::uint64_t RandomStream::below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("RandomStream::below: n must be positive");
    // Multiply-shift map of a 64-bit word onto [0,n); bias is O(n/2^64).
    unsigned __int128 wide = static_cast<unsigned __int128>(next_u64()) * n;
    return static_cast<std::uint64_t>(wide >> 64);
}

double RandomStream::range(double lo, double hi) {
    if (!(lo < hi)) throw std::invalid_argument("RandomStream::range: empty interval");
    double u = static_cast<double>(next_u64() >> 11) * 0x1.0p-53; // [0,1)
    return lo + (hi - lo) * u;
}

double exp_from_uniform(double q, double rate) {
    if (!(rate > 0.0)) throw std::invalid_argument("exp_from_uniform: rate must be positive");
    if (!(q > 0.0) || !(q < 1.0)) throw std::invalid_argument("exp_from_uniform: q must be in (0,1)");
    return -std::log(q) / rate;
}

} // namespace mcsim
