#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dnrr/dynamics.hpp"
#include "dnrr/gsbr.hpp"
#include "dnrr/random.hpp"

// Noise-reduction stage: Metropolis-within-Gibbs sampling of the replica
// trajectory y^n near the observed x^n, and the update of its precision tau.
namespace dnrr::replicator {

struct ReplicaState {
    std::vector<double> y;
    /// Pinned to the currently sampled initial block of x before every sweep.
    std::vector<double> y_initial;
    double tau = 1.0;
    double rho = 1.0;
    double nu = 1e-3;

    void validate() const;
};

/// C(y_j | ...) with y_j replaced by `candidate`:
///
///     tau * sum_{i=j}^{min(j+d, n)} (y_i - g(y_{i-1}, ..., y_{i-d}))^2 + rho (y_j - x_j)^2
///
/// Every residual that involves y_j is included; the y_initial block stands in
/// for indices <= 0. `j` is 1-based.
double cost(std::size_t j, double candidate, const ReplicaState& state, const PolynomialMap& map,
            std::span<const double> x);

struct SweepStats {
    std::uint64_t proposed = 0;
    std::uint64_t accepted = 0;

    double rate() const { return proposed ? static_cast<double>(accepted) / static_cast<double>(proposed) : 0.0; }
};

/// Ascending sweep j = 1..n of symmetric N(0, nu^2) proposals accepted with
/// probability min{1, exp(-(C(y*) - C(y)) / 2)}. Proposals with |y*| > guard
/// are rejected outright. When `site_accepts` is given, accepted proposals are
/// counted per site.
SweepStats mh_sweep(ReplicaState& state, const PolynomialMap& map, std::span<const double> x, Rng& rng,
                    double guard = 1e3, std::vector<std::uint64_t>* site_accepts = nullptr);

/// tau ~ Gamma(gamma1 + n/2, gamma2 + sum_i (y_i - g(y_{i-1}, ..., y_{i-d}))^2 / 2).
void update_tau(ReplicaState& state, const PolynomialMap& map, const gsbr::Priors& priors, Rng& rng);

/// exp(-(rho/2) sum (x_i - y_i)^2): probability that every |x_i - y_i| < gamma_i
/// when gamma_i^2 ~ Exponential(rate rho/2).
double proximity_probability(std::span<const double> x, std::span<const double> y, double rho);

/// Hard-box variant with fixed radii: 1 if every |x_i - y_i| < radius_i, else 0.
double proximity_probability_box(std::span<const double> x, std::span<const double> y,
                                 std::span<const double> radius);

struct AcceptanceBand {
    double lower = 0.25;
    double upper = 0.35;
    double factor = 1.1;
};

/// Multiplicative step-size tuning toward the acceptance band.
double adapt_nu(double nu, double observed_acceptance, const AcceptanceBand& band = {});

}  // namespace dnrr::replicator
