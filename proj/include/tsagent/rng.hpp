#ifndef TSAGENT_RNG_HPP
#define TSAGENT_RNG_HPP

#include <cstdint>
#include <vector>

namespace tsa {

// Deterministic pseudo-random stream (splitmix64 core). All randomness in the
// engine flows through explicitly seeded instances of this class; nothing is
// ever seeded from the clock, so fixed-seed runs are reproducible.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed), has_spare_(false), spare_(0.0) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [lo, hi).
    double uniform(double lo = 0.0, double hi = 1.0) {
        double u = static_cast<double>(next() >> 11) * 0x1.0p-53;
        return lo + u * (hi - lo);
    }

    // Standard Box-Muller with a cached spare.
    double normal(double mean = 0.0, double stddev = 1.0);

    // Uniform integer in [lo, hi] inclusive.
    std::int64_t randint(std::int64_t lo, std::int64_t hi) {
        std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        return lo + static_cast<std::int64_t>(next() % span);
    }

    // Independent stream derived from this seed and a salt; stable against
    // changes in how much the parent stream has been consumed.
    static Rng fork(std::uint64_t seed, std::uint64_t salt) {
        Rng r(seed ^ (0x51afd54e90d5b0b7ULL * (salt + 1)));
        r.next();
        return r;
    }

    // First k of a seeded shuffle of {0..n-1} (partial Fisher-Yates).
    std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

private:
    std::uint64_t state_;
    bool has_spare_;
    double spare_;
};

} // namespace tsa

#endif // TSAGENT_RNG_HPP
