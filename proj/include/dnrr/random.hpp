#pragma once

#include <cstdint>
#include <random>

namespace dnrr {

// One generator per logical thread; never shared between chains.
using Rng = std::mt19937_64;

// Gamma(shape, rate) draw, floored at the smallest normal double so that
// precisions stay strictly positive even for vague priors with shape << 1.
double draw_gamma(Rng& rng, double shape, double rate);

double draw_beta(Rng& rng, double a, double b);

double draw_normal(Rng& rng, double mean = 0.0, double sd = 1.0);

double draw_uniform(Rng& rng);

// Number of failures before the first success, success probability p.
std::int64_t draw_geometric(Rng& rng, double p);

// Derive an independent child seed (splitmix64 mixing).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace dnrr
