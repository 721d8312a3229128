#pragma once

#include <cstdint>
#include <string>

namespace wms {

/// Lowercase hex string of `chars` digits from a per-thread generator seeded
/// from std::random_device. Used for identifiers and lease tokens.
std::string random_hex(std::size_t chars);

/// splitmix64-seeded xoshiro256** stream. Portable and bit-reproducible, unlike
/// the std distributions, so simulator traces and fault schedules replay
/// identically everywhere.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next();
    /// Uniform in [0, 1) with 53 bits of precision.
    double uniform();
    /// Uniform in (0, 1].
    double uniform_open0() { return 1.0 - uniform(); }
    /// Exponential variate with the given rate (> 0).
    double exponential(double rate);
    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);
    bool bernoulli(double p) { return uniform() < p; }

    // UniformRandomBitGenerator, for std::shuffle.
    using result_type = std::uint64_t;
    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type{0}; }
    result_type operator()() { return next(); }

private:
    std::uint64_t s_[4];
};

/// Derives an independent stream seed from a base seed and a stream index.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

} // namespace wms
