#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace voltcast {

// ---------------------------------------------------------------------------
// Deterministic RNG. splitmix64-seeded xoshiro256++ with hand-rolled
// uniform/normal conversion so streams are identical across standard
// libraries (std::normal_distribution is implementation-defined).
// ---------------------------------------------------------------------------
class Rng {
public:
    explicit Rng(uint64_t seed);

    uint64_t next_u64();
    /// Uniform in [0, 1) with 53-bit resolution.
    double uniform();
    double uniform(double lo, double hi);
    /// Standard normal via Box-Muller (one value cached).
    double normal();
    double normal(double mean, double stdev);
    /// Uniform integer in [0, n).
    uint64_t below(uint64_t n);
    /// Poisson count via inversion (suitable for small lambda).
    int poisson(double lambda);
    /// In-place Fisher-Yates shuffle.
    template <class T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
    }

private:
    uint64_t s_[4];
    bool has_cached_ = false;
    double cached_ = 0.0;
};

// ---------------------------------------------------------------------------
// Scalar statistics
// ---------------------------------------------------------------------------
double mean(std::span<const double> v);
/// Unbiased sample variance (n-1 denominator); 0 for n < 2.
double sample_variance(std::span<const double> v);
/// Median with the even-count midpoint convention.
double median(std::vector<double> v);

/// Standard normal CDF.
double normal_cdf(double x);
/// Standard normal quantile. Acklam's rational approximation plus one
/// Halley refinement step; accurate to ~1e-15 over (0, 1).
double normal_quantile(double p);

/// FNV-1a 64-bit hash, used for config/content fingerprints.
uint64_t fnv1a64(std::string_view bytes);
std::string hex64(uint64_t h);

}  // namespace voltcast
