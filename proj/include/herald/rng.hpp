#pragma once

#include <cmath>
#include <cstdint>

namespace herald {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

/// Counter-based sample stream: the state is derived from (seed, index) alone,
/// so sample i draws the same numbers no matter how the run is partitioned
/// into batches or threads.
class SampleRng {
public:
    SampleRng(std::uint64_t seed, std::uint64_t index) {
        state_ = seed ^ 0x6a09e667f3bcc909ull;
        splitmix64(state_);
        state_ += index * 0x9e3779b97f4a7c15ull;
        splitmix64(state_);
    }

    std::uint64_t next_u64() { return splitmix64(state_); }

    /// Uniform in [0, 1) with 53-bit resolution.
    double uniform() { return (next_u64() >> 11) * 0x1.0p-53; }

    /// Exponential with the given mean; strictly positive.
    double exponential(double mean) { return -mean * std::log1p(-uniform()); }

    /// Standard normal via Box-Muller, one spare cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.28318530717958647692 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    double normal(double sigma) { return sigma * normal(); }

private:
    std::uint64_t state_ = 0;
    double spare_ = 0;
    bool has_spare_ = false;
};

} // namespace herald
