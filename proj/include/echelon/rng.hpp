#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>

namespace echelon {

/// Deterministic 64-bit generator (splitmix64).
///
/// The stream is part of the project contract: every experiment is keyed by a
/// seed, and two processes given the same seed must produce bit-identical
/// draws. The update is
///
///   state += 0x9E3779B97F4A7C15
///   z = state
///   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
///   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
///   return z ^ (z >> 31)
///
/// Uniform doubles take the top 53 bits of the output word. Gaussians use the
/// Box-Muller transform; each transform consumes exactly two uniforms and
/// yields two normals, returned in order (the second is cached for the next
/// call). A call with sd == 0 returns the mean and leaves the stream and the
/// cache untouched.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ull;
        return mix(state_);
    }

    /// Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + uniform() * (hi - lo); }

    /// Uniform integer in [lo, hi] inclusive.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        if (hi < lo) throw std::invalid_argument("uniform_int: empty range");
        const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
        return lo + static_cast<std::int64_t>(next_u64() % span);
    }

    /// Gaussian draw. sd must be >= 0; sd == 0 returns mean exactly.
    double gaussian(double mean, double sd) {
        if (sd < 0.0) throw std::invalid_argument("gaussian: negative sd");
        if (sd == 0.0) return mean;
        return mean + sd * standard_normal();
    }

    /// Standard normal via Box-Muller; 1 - uniform() keeps log() finite.
    double standard_normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    /// Derive an independent sub-stream. Keyed so that (seed, stream) pairs
    /// map to well-separated states; used to give each (model, layer, role)
    /// its own generator inside one experiment.
    static Rng derive(std::uint64_t seed, std::uint64_t stream) {
        return Rng(mix(seed + 0x9E3779B97F4A7C15ull * (stream + 1)));
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace echelon
