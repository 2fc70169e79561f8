#pragma once
#include <cmath>
#include <cstdint>
#include <random>

namespace fleetsim {

// Deterministic RNG wrapper. All draws go through explicit inverse-CDF /
// Box-Muller style transforms rather than std:: distributions, so a given
// seed produces the same stream on every platform and library version.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    // Derive an independent stream; distinct labels give distinct streams.
    Rng fork(std::uint64_t label) const {
        std::uint64_t s = seed_mix_ ^ (label * 0x9e3779b97f4a7c15ULL);
        Rng r(s);
        return r;
    }

    std::uint64_t next_u64() { return gen_(); }

    // Uniform in (0, 1]; never returns 0 so log() is safe.
    double uniform() {
        return (static_cast<double>(gen_() >> 11) + 1.0) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double exponential(double rate) { return -std::log(uniform()) / rate; }

    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    double lognormal(double mu, double sigma) {
        return std::exp(mu + sigma * normal());
    }

    double triangular(double lo, double mode, double hi) {
        double u = uniform();
        double fc = (mode - lo) / (hi - lo);
        if (u < fc) return lo + std::sqrt(u * (hi - lo) * (mode - lo));
        return hi - std::sqrt((1.0 - u) * (hi - lo) * (hi - mode));
    }

    bool bernoulli(double p) { return uniform() <= p; }

private:
    std::mt19937_64 gen_;
    std::uint64_t seed_mix_ = gen_();
};

}  // namespace fleetsim
