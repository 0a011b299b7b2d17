#ifndef EXCHNET_RNG_HPP
#define EXCHNET_RNG_HPP

#include <cstdint>

namespace exchnet {

/// Splittable counter-seeded generator. A stream is keyed by an arbitrary
/// list of 64-bit labels mixed through SplitMix64, so that e.g.
/// (seed, replication, purpose) always yields the same stream regardless of
/// thread scheduling or call order elsewhere.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : state_(mix(seed ^ 0x9e3779b97f4a7c15ull)) {}

    RngStream derive(std::uint64_t label) const {
        RngStream r(0);
        r.state_ = mix(state_ ^ mix(label + 0x632be59bd9b4e019ull));
        return r;
    }

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ull;
        return mix(state_);
    }

    /// Uniform on (0, 1), never exactly 0 or 1.
    double next_uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal via inverse CDF.
    double next_normal();

    /// Poisson draw; inversion for small mean, PTRS rejection for large.
    long next_poisson(double mean);

private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }
    std::uint64_t state_;
};

} // namespace exchnet

#endif
