#include "degree/rng.hpp"

#include "degree/errors.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace degree {

std::uint64_t rng_stream::next_below(std::uint64_t n) {
    if (n == 0) throw config_error("rng_stream::next_below: n must be positive");
    const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
    // Largest value below which modulo reduction is exactly uniform.
    const std::uint64_t limit = max - (max % n + 1) % n;
    std::uint64_t x;
    do {
        x = next_u64();
    } while (x > limit);
    return x % n;
}

double rng_stream::next_gaussian(double mean, double stddev) {
    if (has_spare_) {
        has_spare_ = false;
        return mean + stddev * spare_;
    }
    // u1 in (0,1] so the log is finite.
    const double u1 = 1.0 - next_unit();
    const double u2 = next_unit();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return mean + stddev * radius * std::cos(angle);
}

} // namespace degree
