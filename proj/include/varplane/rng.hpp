#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace vp {

// Counter-based generator: output i of stream (seed, a, b) is a pure function of its arguments,
// so parallel batches draw identical numbers regardless of scheduling.
class KeyedRng {
public:
    KeyedRng(std::uint64_t seed, std::uint64_t stream = 0, std::uint64_t substream = 0)
        : key_(mix(mix(seed ^ 0x9e3779b97f4a7c15ULL) ^ mix(stream + 0x632be59bd9b4e019ULL) ^
                   mix(substream + 0x85157af5b4f7a5b1ULL))) {}

    std::uint64_t next_u64() { return mix(key_ + (counter_++) * 0x9e3779b97f4a7c15ULL); }
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double normal() {
        const double u1 = 1.0 - uniform(), u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }
    std::uint64_t counter() const { return counter_; }

    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace vp
