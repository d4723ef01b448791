#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace perfdom {

// ---------------------------------------------------------------------------
// Counter-based RNG (SplitMix64 finalizer over key + counter).
//
// Streams are derived from (seed, stream, substream); values depend only on
// that key and the draw counter, so e.g. per-point mark substreams stay
// bit-identical when the point count changes.
// ---------------------------------------------------------------------------

namespace detail {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

inline std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
}
}  // namespace detail

class CounterRng {
  public:
    CounterRng(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream = 0)
        : key_(detail::mix64(detail::mix64(seed + detail::kGolden) ^
                             (stream * 0xD1342543DE82EF95ull)) ^
               detail::mix64(substream * 0x9E6C63D0876A9A75ull)) {}

    std::uint64_t next_u64() { return detail::mix64(key_ + (++ctr_) * detail::kGolden); }

    /// Uniform in [0, 1).
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * next_unit(); }

    /// Standard normal (polar method).
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * next_unit() - 1.0;
            v = 2.0 * next_unit() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * m;
        have_spare_ = true;
        return u * m;
    }

  private:
    std::uint64_t key_;
    std::uint64_t ctr_ = 0;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// ---------------------------------------------------------------------------
// Poisson sampling: sequential inversion below mean 30, PTRS transformed
// rejection (Hormann) above.
// ---------------------------------------------------------------------------

inline std::uint64_t poisson_inversion(double mean, CounterRng& rng) {
    double u = rng.next_unit();
    double p = std::exp(-mean);
    double cum = p;
    std::uint64_t k = 0;
    while (u > cum && k < 1000000) {
        ++k;
        p *= mean / static_cast<double>(k);
        cum += p;
    }
    return k;
}

inline std::uint64_t poisson_ptrs(double mean, CounterRng& rng) {
    const double slam = std::sqrt(mean);
    const double loglam = std::log(mean);
    const double b = 0.931 + 2.53 * slam;
    const double a = -0.059 + 0.02483 * b;
    const double invalpha = 1.1239 + 1.1328 / (b - 3.4);
    const double vr = 0.9277 - 3.6224 / (b - 2.0);
    while (true) {
        double U = rng.next_unit() - 0.5;
        double V = rng.next_unit();
        double us = 0.5 - std::abs(U);
        double kr = std::floor((2.0 * a / us + b) * U + mean + 0.43);
        if (us >= 0.07 && V <= vr) return static_cast<std::uint64_t>(kr);
        if (kr < 0.0 || (us < 0.013 && V > us)) continue;
        double k = kr;
        if (std::log(V) + std::log(invalpha) - std::log(a / (us * us) + b) <=
            k * loglam - mean - std::lgamma(k + 1.0))
            return static_cast<std::uint64_t>(kr);
    }
}

inline std::uint64_t poisson(double mean, CounterRng& rng) {
    if (mean < 0.0) throw std::invalid_argument("poisson: negative mean");
    if (mean == 0.0) return 0;
    return mean < 30.0 ? poisson_inversion(mean, rng) : poisson_ptrs(mean, rng);
}

}  // namespace perfdom
