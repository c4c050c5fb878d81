#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace fluhgam {

using Rng = std::mt19937_64;

// All randomness flows from one user seed through named sub-streams so that
// independent tasks (forecast dates, sweep cells, sampler) never share state.
inline std::uint64_t substream_seed(std::uint64_t seed, std::string_view tag) {
    // FNV-1a over the tag, then splitmix64 finalization.
    std::uint64_t h = 1469598103934665603ull;
    for (char c : tag) {
        h ^= static_cast<std::uint8_t>(c);
        h *= 1099511628211ull;
    }
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ull + h;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline Rng make_rng(std::uint64_t seed, std::string_view tag) {
    return Rng(substream_seed(seed, tag));
}

// Negative binomial (mean mu, dispersion theta) via the gamma-Poisson mixture.
inline std::int64_t negative_binomial_draw(Rng& rng, double mu, double theta) {
    if (mu <= 0.0) return 0;
    std::gamma_distribution<double> gamma(theta, mu / theta);
    double lambda = gamma(rng);
    if (lambda <= 0.0) return 0;
    std::poisson_distribution<std::int64_t> pois(lambda);
    return pois(rng);
}

} // namespace fluhgam
