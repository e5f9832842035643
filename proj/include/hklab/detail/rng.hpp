#ifndef HKLAB_DETAIL_RNG_HPP
#define HKLAB_DETAIL_RNG_HPP

#include <cmath>
#include <cstdint>

namespace hklab::detail {

// Counter-based generator built on the splitmix64 finalizer. Every draw is a
// pure function of (seed, stream, counter), so independent streams can be
// evaluated in any order or in parallel.

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline std::uint64_t counter_bits(std::uint64_t seed, std::uint64_t stream,
                                  std::uint64_t counter) {
    std::uint64_t h = splitmix64(seed ^ 0x5851f42d4c957f2dull);
    h = splitmix64(h ^ stream);
    return splitmix64(h ^ counter);
}

/// Uniform in (0, 1]; never returns 0 so log() is safe.
inline double uniform_unit(std::uint64_t seed, std::uint64_t stream,
                           std::uint64_t counter) {
    const std::uint64_t bits = counter_bits(seed, stream, counter);
    return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
}

/// Standard normal via Box-Muller on two counter draws.
inline double normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
    const double u1 = uniform_unit(seed, stream, 2 * counter);
    const double u2 = uniform_unit(seed, stream, 2 * counter + 1);
    constexpr double two_pi = 6.283185307179586476925286766559;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
}

} // namespace hklab::detail

#endif
