#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace satslam {

/// Seeded random stream with fixed uniform/normal transforms.
///
/// The engine is std::mt19937_64; the variate transforms are spelled out here
/// instead of using std::*_distribution so that sequences are identical across
/// standard library implementations. All frozen regression values in the test
/// suite depend on this.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    /// Uniform double in [0, 1), 53-bit resolution.
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) {
        return lo + uniform01() * (hi - lo);
    }

    /// Standard normal via Box-Muller; the spare variate is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform01();
        double u2 = uniform01();
        if (u1 < 1e-300) u1 = 1e-300;
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * M_PI * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    std::uint64_t raw() { return engine_(); }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Counter-based derivation of child seeds (splitmix64 finalizer over the
/// master seed and a list of stream tags). Adding new tags never perturbs
/// streams derived with existing ones.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> tags) {
    auto mix = [](std::uint64_t x) {
        x += 0x9E3779B97F4A7C15ULL;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
        return x ^ (x >> 31);
    };
    std::uint64_t h = mix(master);
    for (std::uint64_t t : tags) {
        h = mix(h ^ mix(t));
    }
    return h;
}

} // namespace satslam
