#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dnrr/dynamics.hpp"
#include "dnrr/gsbr.hpp"

namespace dnrr {

struct ChainConfig {
    std::size_t iterations = 250000;
    std::size_t burn_in = 50000;
    std::size_t thin = 10;
    std::uint64_t seed = 1;
    double rho = 100.0;
    gsbr::Priors priors;
    /// Sweeps per step-size adaptation during burn-in.
    std::size_t adaptation_window = 100;
    /// Initial proposal sd of the replica sweep; 0 selects 1/sqrt(E[tau]).
    double nu_initial = 0.0;
    /// Random-walk step for the initial-condition update.
    double initial_step = 0.05;
    double guard = 1e3;
    /// When false only the reconstruction group is sampled (no y^n, no tau).
    bool replicate = true;

    /// 25e4 sweeps with 5e4 burn-in.
    static ChainConfig paper();
    /// 3e4 sweeps with 1e4 burn-in.
    static ChainConfig desk();

    void validate() const;
    std::size_t stored_draws() const { return (iterations - burn_in) / thin; }
};

/// Post-burn-in, thinned draws. Row r of every matrix/vector belongs to the
/// same stored sweep.
struct PosteriorChain {
    Eigen::MatrixXd theta_draws;
    Eigen::MatrixXd initial_draws;
    Eigen::VectorXd tau_draws;
    Eigen::VectorXd p_draws;
    Eigen::VectorXd noise_predictive_draws;
    Eigen::VectorXd nstar_trace;
    Eigen::MatrixXd y_draws;
    /// Per-site acceptance rate of the replica sweep after burn-in.
    std::vector<double> site_acceptance;
    double global_acceptance = 0.0;
    double initial_acceptance = 0.0;
    double final_nu = 0.0;

    std::size_t draws() const { return static_cast<std::size_t>(theta_draws.rows()); }

    Eigen::VectorXd theta_mean() const { return theta_draws.colwise().mean(); }
    Eigen::VectorXd initial_mean() const { return initial_draws.colwise().mean(); }
};

/// Blocked Gibbs sampler. Per sweep: levels, allocations, precisions, initial
/// conditions, theta, p and one predictive noise draw given x^n only; then the
/// replica sweep over y^n and tau given those. The two groups draw from
/// independent random streams derived from config.seed.
PosteriorChain run_chain(const Trajectory& x, const PolynomialMap& model, const ChainConfig& config);

struct ChainOutcome {
    double rho = 0.0;
    std::uint64_t seed = 0;
    std::optional<PosteriorChain> chain;
    std::string error;
};

/// Independent chains on the same data; failures are recorded per chain.
std::vector<ChainOutcome> run_replicated(const Trajectory& x, const PolynomialMap& model,
                                         const std::vector<ChainConfig>& configs, unsigned jobs = 1);

/// Columnar CSV per parameter plus manifest.json with config, model, data and
/// content hashes.
void save_chain(const std::filesystem::path& dir, const PosteriorChain& chain, const ChainConfig& config,
                const PolynomialMap& model, const Trajectory& x);

struct LoadedChain {
    PosteriorChain chain;
    ChainConfig config;
    PolynomialMap model;
    Trajectory data;
};

LoadedChain load_chain(const std::filesystem::path& dir);

std::string config_to_json(const ChainConfig& config);
ChainConfig config_from_json(const std::string& text);

}  // namespace dnrr
