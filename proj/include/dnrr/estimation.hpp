#pragma once

#include <cstddef>
#include <map>
#include <mutex>
#include <span>
#include <utility>
#include <vector>

#include "dnrr/orchestrator.hpp"
#include "dnrr/random.hpp"

namespace dnrr::estimation {

/// Hartigan dip of the sample: sup-distance between the empirical CDF and the
/// closest unimodal CDF (greatest convex minorant / least concave majorant).
/// The sample need not be sorted. Requires at least 4 points.
double dip_statistic(std::span<const double> sample);

/// Dips of `draws` uniform(0,1) samples of one fixed size, sorted ascending.
class DipNull {
 public:
    DipNull(std::size_t size, std::size_t draws, Rng& rng);

    std::size_t size() const noexcept { return size_; }
    std::size_t draws() const noexcept { return null_.size(); }

    /// (1 + #{null >= statistic}) / (draws + 1).
    double p_value(double statistic) const;

 private:
    std::size_t size_;
    std::vector<double> null_;
};

struct DipResult {
    double statistic;
    double p_value;
};

DipResult dip_test(std::span<const double> sample, std::size_t calibration_draws, Rng& rng);
DipResult dip_test(std::span<const double> sample, const DipNull& null);

/// 0.9 min(sd, IQR/1.34) N^{-1/5}; falls back to sd when the IQR is zero and
/// returns 0 for a constant sample.
double silverman_bandwidth(std::span<const double> sample);

/// Gaussian kernel density over a sample, evaluated with a +-8h cutoff.
class Kde {
 public:
    explicit Kde(std::span<const double> sample, double bandwidth = 0.0);

    double bandwidth() const noexcept { return h_; }
    double operator()(double x) const;
    std::vector<double> evaluate(std::span<const double> grid) const;

 private:
    std::vector<double> sorted_;
    double h_;
};

/// Mode of the Silverman-bandwidth KDE: grid search over the sample range,
/// then golden-section refinement around the best grid point.
double map_estimate(std::span<const double> sample);

/// Shortest window of ceil(mass * N) sorted points; the first one on ties.
std::pair<double, double> hpd_interval(std::span<const double> sample, double mass);

/// 1 - H(s)/log(m): s is the demeaned periodogram averaged over consecutive
/// non-overlapping blocks of `block` positive-frequency bins, normalized to
/// sum 1, and m the number of blocks. Constant input gives 1.
double forecastability(std::span<const double> sample, std::size_t block = 5);

struct MarginalSummary {
    std::size_t site = 0;
    double mean = 0.0;
    double map_estimate = 0.0;
    double dip_statistic = 0.0;
    double dip_pvalue = 1.0;
    bool multimodal = false;
    double omega = 0.0;
    double chosen = 0.0;
};

struct EstimateSelection {
    std::vector<double> y_point;
    std::vector<MarginalSummary> summaries;
    /// 1-based sites whose marginal rejects unimodality.
    std::vector<std::size_t> m_ht;
    /// 1-based sites with the ceil(0.01 n) largest forecastability indices.
    std::vector<std::size_t> omega_ht;
};

struct SelectionOptions {
    double alpha = 0.05;
    std::size_t calibration_draws = 1000;
    std::uint64_t calibration_seed = 20170101;
};

/// Per-site mean or MAP chosen by the dip test, plus the multimodal and
/// forecastable site sets. Dip nulls are cached per sample size.
EstimateSelection select_estimates(const PosteriorChain& chain, const SelectionOptions& options = {});

/// KDE of the predictive noise draws on the grid.
std::vector<double> noise_density_estimate(const PosteriorChain& chain, std::span<const double> grid);

/// Process-wide cache of dip nulls keyed by (size, draws, seed).
const DipNull& cached_dip_null(std::size_t size, std::size_t draws, std::uint64_t seed);

}  // namespace dnrr::estimation
