#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace degree {

/// Deterministic random stream. The raw source is std::mt19937_64, whose
/// output sequence is fixed by the standard, and every derived draw below
/// is computed from that output with explicit arithmetic rather than the
/// (implementation-defined) standard distributions. Equal seeds therefore
/// give bit-identical integer and uniform draws across platforms;
/// gaussian draws additionally depend on the platform's log/cos/sqrt.
class rng_stream {
public:
    explicit rng_stream(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    static constexpr std::string_view algorithm = "mt19937_64";

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0,1) with 53 random bits.
    double next_unit() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform integer on [0, n); n must be positive. Rejection sampling,
    /// so the result is exactly uniform.
    std::uint64_t next_below(std::uint64_t n);

    double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

    /// Box-Muller transform over the uniform source; pairs are consumed
    /// two at a time and the spare value is cached.
    double next_gaussian(double mean = 0.0, double stddev = 1.0);

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace degree
