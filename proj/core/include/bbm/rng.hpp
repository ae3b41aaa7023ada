#pragma once

#include <cstdint>
#include <random>

namespace bbm {

/**
 * Stream derivation for replicate i of an experiment seeded with `master`.
 *
 *   z = master + (index + 1) * 0x9E3779B97F4A7C15
 *   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
 *   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
 *   return z ^ (z >> 31)
 *
 * This is the splitmix64 output function applied to the index-th element of
 * the Weyl sequence started at `master`. Alternate implementations that
 * reproduce it together with std::mt19937_64 seeded by the result reproduce
 * every replicate stream.
 */
constexpr std::uint64_t mix64(std::uint64_t master, std::uint64_t index) noexcept {
    std::uint64_t z = master + (index + 1) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Random source owned by one replicate. Not thread-safe; one per run.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double normal() { return normal_(engine_); }

    /// Exponential(1), strictly positive.
    double exponential() {
        double e = exp_(engine_);
        while (e <= 0.0) e = exp_(engine_);
        return e;
    }

    /// Uniform on [0, 1).
    double uniform() { return unif_(engine_); }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::exponential_distribution<double> exp_{1.0};
    std::uniform_real_distribution<double> unif_{0.0, 1.0};
};

}  // namespace bbm
