#pragma once

#include <span>
#include <string>
#include <vector>

#include "dnrr/dynamics.hpp"

namespace dnrr::metrics {

/// Floor of the log10 indeterminism trace for residuals that are exactly zero.
inline constexpr double kLog10Floor = -16.0;

/// Coefficients whose true magnitude is below this get absolute (not relative) PAREs.
inline constexpr double kPareZeroEps = 1e-12;

double sample_sd(std::span<const double> v);

/// E0: root-mean-square distance between two equally long series.
double avg_correction(std::span<const double> x, std::span<const double> y);

/// E_dyn: root-mean-square one-step residual of z against the map, using
/// z.initial for the first d windows.
double avg_dynamical_error(const Trajectory& z, const PolynomialMap& map);

/// R_dyn = 1 - edyn_y / edyn_x.
double relative_reduction(double edyn_y, double edyn_x);

/// eta = 100 * noise_sd / sd(series), in percent.
double noise_level(double noise_sd, std::span<const double> series);

/// E|Z| / sd(Z) for Z drawn from the mixture.
double tail_flatness(const MixtureNoise& noise);

struct PareResult {
    std::vector<double> per_coefficient;
    /// Entries computed as absolute errors because the true value is zero.
    std::vector<bool> absolute;
    double mean;
    double l2;
};

PareResult pare(std::span<const double> theta_hat, std::span<const double> theta_true,
                double zero_eps = kPareZeroEps);

/// log10 |z_i - g(z_{i-1}, ..., z_{i-d})| per site, floored at kLog10Floor.
std::vector<double> indeterminism_trace(const Trajectory& z, const PolynomialMap& map);

/// Spearman rank correlation with average ranks for ties.
double spearman(std::span<const double> a, std::span<const double> b);

struct NoiseReductionReport {
    double e0 = 0.0;
    double edyn_x = 0.0;
    double edyn_y = 0.0;
    double rdyn = 0.0;
    double eta = 0.0;
    std::vector<double> pare_x;
    std::vector<double> pare_y;
    double pare_mean_x = 0.0;
    double pare_mean_y = 0.0;
    double l2_x = 0.0;
    double l2_y = 0.0;
    std::vector<double> indeterminism_trace_x;
    std::vector<double> indeterminism_trace_y;
};

std::string to_json(const NoiseReductionReport& report);
NoiseReductionReport report_from_json(const std::string& text);

}  // namespace dnrr::metrics
