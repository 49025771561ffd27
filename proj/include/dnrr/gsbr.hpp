#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "dnrr/dynamics.hpp"
#include "dnrr/random.hpp"

// Reconstruction stage: Gibbs updates for the geometric-weights mixture noise
// model, the map coefficients and the initial conditions, given the observed
// series only.
namespace dnrr::gsbr {

struct Priors {
    // Beta(a1, a2) on the geometric probability p (arcsine by default).
    double a1 = 0.5;
    double a2 = 0.5;
    // Gamma(shape b1, rate b2) on each mixture precision.
    double b1 = 1e-3;
    double b2 = 1e-3;
    // Gamma(shape gamma1, rate gamma2) on the replica precision tau.
    double gamma1 = 1e4;
    double gamma2 = 1e-2;

    void validate() const;
    double tau_prior_mean() const { return gamma1 / gamma2; }
};

struct ReconState {
    double p = 0.5;
    /// lambda_1..lambda_{N*}; entry j-1 holds lambda_j.
    std::vector<double> lambdas;
    /// Component labels d_i, 1-based.
    std::vector<int> allocations;
    /// Truncation levels N_i >= d_i.
    std::vector<int> levels;
    std::vector<double> theta;
    /// Sampled initial block (x_0, x_{-1}, ..., x_{1-d}).
    std::vector<double> initial;

    int nstar() const;
    void validate() const;
};

/// Observed series and model space bundled with the data-only part of the
/// design matrix.
class ReconModel {
 public:
    ReconModel(const Trajectory& x, const PolynomialMap& map);

    const Trajectory& data() const noexcept { return x_; }
    const PolynomialMap& map() const noexcept { return map_; }
    std::size_t n() const noexcept { return x_.values.size(); }
    std::size_t dim() const noexcept { return map_.size(); }

    /// Basis rows phi_i for i = 1..n at the given initial block.
    Eigen::MatrixXd design(std::span<const double> initial) const;

    /// x_i - theta . phi_i for i = 1..n.
    std::vector<double> residuals(std::span<const double> theta, std::span<const double> initial) const;

 private:
    Trajectory x_;
    PolynomialMap map_;
    Eigen::MatrixXd design_;  // rows for i > d; rows i <= d are rebuilt per call
};

/// Extend lambdas with prior draws up to the current N*.
void ensure_lambdas(ReconState& state, const Priors& priors, Rng& rng);

/// N_i = d_i + Geometric(p) failures.
void update_levels(ReconState& state, Rng& rng);

/// d_i over {1..N_i} with weights lambda_j^{1/2} exp(-lambda_j r_i^2 / 2).
void update_allocations(ReconState& state, const ReconModel& model, const Priors& priors, Rng& rng);

/// lambda_j ~ Gamma(b1 + n_j/2, b2 + S_j/2) for j = 1..N*; the list is
/// truncated to N* afterwards.
void update_lambdas(ReconState& state, const ReconModel& model, const Priors& priors, Rng& rng);

/// p ~ Beta(a1 + 2n, a2 + sum(N_i - 1)).
void update_p(ReconState& state, const Priors& priors, Rng& rng);

struct ThetaConditional {
    Eigen::VectorXd mean;
    Eigen::MatrixXd precision;
};

/// Normal full conditional of theta under the flat prior. Throws
/// RankDeficiency when the weighted design is singular.
ThetaConditional theta_conditional(const ReconState& state, const ReconModel& model);

void update_theta(ReconState& state, const ReconModel& model, Rng& rng);

/// One random-walk Metropolis step per initial coordinate. Returns the
/// number of accepted proposals.
int update_initial(ReconState& state, const ReconModel& model, Rng& rng, double step);

/// Geometric weights w_j = p (1 - p)^{j-1}, j = 1..N*, with the leftover
/// mass (1 - p)^{N*} added to the last component.
std::vector<double> predictive_weights(const ReconState& state);

/// One draw from sum_j w_j N(0, 1/lambda_j).
double sample_noise_predictive(const ReconState& state, Rng& rng);

/// Unit-weight least squares fit of the map coefficients.
std::vector<double> least_squares_theta(const ReconModel& model, std::span<const double> initial);

}  // namespace dnrr::gsbr
