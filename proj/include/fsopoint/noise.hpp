// Counter-based Gaussian noise source.
//
// Reproducibility is part of the simulation contract: identical
// (seed, stream) must yield bit-identical sample sequences, independent of
// how many sources exist or in which order they are consumed. A counter-based
// design (stateless mixing of seed/stream/counter through splitmix64) gives
// that property without shared state, so Monte-Carlo ensembles can run one
// stream per trajectory and merge deterministically.
#pragma once

#include <cmath>
#include <cstdint>

namespace fso::noise {

/// splitmix64 finalizer: a well-mixed 64-bit permutation.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/**
 * @brief Deterministic Gaussian sample stream.
 *
 * Addressed by (seed, stream). Uniform 64-bit words come from mixing a
 * per-stream key with a sample counter; standard normals are produced by
 * Box-Muller on those words. Two sources with equal (seed, stream) produce
 * bit-identical sequences regardless of construction order.
 */
class NoiseSource {
  public:
    NoiseSource(std::uint64_t seed, std::uint64_t stream)
        : key_(splitmix64(splitmix64(seed) ^ splitmix64(0xD1B54A32D192ED03ULL + stream))),
          counter_(0), have_spare_(false), spare_(0.0) {}

    std::uint64_t seed_key() const { return key_; }

    /// Next uniform double in the open interval (0, 1).
    double next_uniform() {
        std::uint64_t word = splitmix64(key_ + 0x9E3779B97F4A7C15ULL * (++counter_));
        // 53 random bits, offset by half an ulp so the result is never 0 or 1.
        return (static_cast<double>(word >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Next standard normal sample (Box-Muller, pairwise).
    double next_normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = next_uniform();
        double u2 = next_uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

  private:
    std::uint64_t key_;
    std::uint64_t counter_;
    bool have_spare_;
    double spare_;
};

} // namespace fso::noise
