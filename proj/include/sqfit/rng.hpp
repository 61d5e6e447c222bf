#pragma once

#include <cstdint>
#include <random>

namespace sqfit {

/// splitmix64 step, used to derive independent stream seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Deterministic sub-seed for (seed, salt), e.g. per view or per trial.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t s = seed ^ (0x632be59bd9b4e019ULL * (salt + 1));
    return splitmix64(s);
}

/// mt19937_64 wrapper with portable uniform draws. std::uniform_real_distribution
/// is implementation-defined, so doubles are built from raw engine bits instead.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform in [0, 1).
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        // Modulo bias is irrelevant at the n used here (tiny vs 2^64).
        return engine_() % n;
    }

  private:
    std::mt19937_64 engine_;
};

}  // namespace sqfit
