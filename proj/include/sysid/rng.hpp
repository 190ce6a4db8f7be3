#pragma once

#include <cmath>
#include <cstdint>

namespace sysid {

/// splitmix64 step: advances `state` and returns the next output word.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// Derives a child seed from (parent, index). Used to give every rollout,
/// noise channel, Monte Carlo trial, and sweep cell its own independent
/// sub-stream regardless of execution order.
inline std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) {
    std::uint64_t s = parent;
    std::uint64_t h = splitmix64(s);
    s ^= h ^ (index + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2));
    return splitmix64(s);
}

/// Deterministic random stream: splitmix64 words mapped to uniforms and,
/// via the Box-Muller transform, to standard Gaussians. Both transforms
/// are fixed here so the same seed yields the same draws on any platform
/// (std::normal_distribution makes no such guarantee).
class RandomStream {
  public:
    explicit RandomStream(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() { return splitmix64(state_); }

    /// Uniform double in [0, 1) with 53 random bits.
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Standard normal draw; second Box-Muller value is cached.
    double next_gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        // u1 in (0, 1] keeps log(u1) finite.
        const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
        const double u2 = next_unit();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    /// Uniform integer in [lo, hi], inclusive, by rejection sampling.
    int uniform_int(int lo, int hi) {
        const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
        std::uint64_t x;
        do {
            x = next_u64();
        } while (x >= limit);
        return lo + static_cast<int>(x % span);
    }

  private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace sysid
