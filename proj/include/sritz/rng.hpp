#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "sritz/core.hpp"

namespace sritz {

/// Stream tags separating independent uses of one run seed.
enum class Stream : std::uint32_t {
    batch = 1,  // per-iteration training batches, index = iteration
    init = 2,   // parameter initialization
    test = 3,   // fresh-point testing loss, index = iteration
    eval = 4,   // error evaluation
    oracle = 5, // Monte-Carlo energy oracle
};

/// Seeded random stream. A stream is fully determined by (seed, tag, index), so a
/// batch for any iteration can be regenerated in isolation. Conversions to uniform
/// and normal variates are done here rather than through <random> distributions,
/// whose output is implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed, Stream tag = Stream::batch, std::uint64_t index = 0) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(index),
                          static_cast<std::uint32_t>(index >> 32)};
        engine_.seed(seq);
    }

    std::uint64_t bits() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform on (0, 1].
    double uniform_open_low() { return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller; the second variate is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double r = std::sqrt(-2.0 * std::log(uniform_open_low()));
        const double t = 2.0 * pi * uniform();
        spare_ = r * std::sin(t);
        has_spare_ = true;
        return r * std::cos(t);
    }

    /// Integer uniform on [0, n).
    std::uint64_t below(std::uint64_t n) { return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n; }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace sritz
