#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dnrr/random.hpp"

namespace dnrr {

using Exponents = std::vector<int>;

/// Lag-d delay map g(theta; x_{i-1}, ..., x_{i-d}) expressed as a linear
/// combination of monomials in the delayed values.
///
/// The full basis of a given degree is enumerated degree by degree. Inside a
/// degree, monomials with a smaller largest exponent come first and ties are
/// broken by descending lexicographic order of the exponent vector. For
/// lag 2, degree 2 this gives
///
///     1, x1, x2, x1*x2, x1^2, x2^2        (x1 = x_{i-1}, x2 = x_{i-2})
///
/// and for lag 1 the plain power sequence 1, x, x^2, ...
class PolynomialMap {
 public:
    PolynomialMap() = default;
    PolynomialMap(int lag, std::vector<Exponents> basis, std::vector<double> coefficients);

    /// Every monomial of total degree <= degree over `lag` variables.
    static PolynomialMap full(int lag, int degree, std::vector<double> coefficients = {});

    int lag() const noexcept { return lag_; }
    int degree() const noexcept { return degree_; }
    std::size_t size() const noexcept { return basis_.size(); }
    const std::vector<Exponents>& basis() const noexcept { return basis_; }
    std::span<const double> coefficients() const noexcept { return coefficients_; }
    void set_coefficients(std::span<const double> coefficients);

    /// Monomials at `window` = (x_{i-1}, ..., x_{i-d}) written into `out`.
    void eval_basis(std::span<const double> window, std::span<double> out) const;
    std::vector<double> eval_basis(std::span<const double> window) const;

    double operator()(std::span<const double> window) const;

    std::string describe() const;

 private:
    int lag_ = 0;
    int degree_ = 0;
    std::vector<Exponents> basis_;
    std::vector<double> coefficients_;
};

std::vector<double> eval_basis(const PolynomialMap& map, std::span<const double> window);
double eval_map(const PolynomialMap& map, std::span<const double> window);

/// Finite mixture of zero-mean normals.
class MixtureNoise {
 public:
    MixtureNoise() = default;
    MixtureNoise(std::vector<double> weights, std::vector<double> variances);

    const std::vector<double>& weights() const noexcept { return weights_; }
    const std::vector<double>& variances() const noexcept { return variances_; }
    std::size_t components() const noexcept { return weights_.size(); }

    double variance() const;
    double sd() const;
    double density(double z) const;

    std::string describe() const;

 private:
    std::vector<double> weights_;
    std::vector<double> variances_;
};

/// N(0, sigma2).
MixtureNoise gaussian_noise(double sigma2);

/// ((5 + l)/10) N(0, sigma2) + ((5 - l)/10) N(0, 100 sigma2), 1 <= l <= 4.
MixtureNoise two_scale_noise(int l, double sigma2);

std::vector<double> sample_noise(const MixtureNoise& noise, std::size_t count, Rng& rng);

/// Observed series x_1..x_n together with the d initial values
/// (x_0, x_{-1}, ..., x_{1-d}).
struct Trajectory {
    std::vector<double> values;
    std::vector<double> initial;
    std::map<std::string, std::string> meta;

    std::size_t size() const noexcept { return values.size(); }
    int lag() const noexcept { return static_cast<int>(initial.size()); }
};

/// z_k for 1 - d <= k <= n, reading the initial block for k <= 0.
inline double value_at(std::span<const double> values, std::span<const double> initial, long k) {
    return k >= 1 ? values[static_cast<std::size_t>(k - 1)] : initial[static_cast<std::size_t>(-k)];
}

/// Fill `window` with (z_{i-1}, ..., z_{i-d}) for the 1-based site i.
void window_at(std::span<const double> values, std::span<const double> initial, std::size_t i,
               std::span<double> window);

/// z_i - g(z_{i-1}, ..., z_{i-d}) for i = 1..n.
std::vector<double> residuals(const PolynomialMap& map, std::span<const double> values,
                              std::span<const double> initial);

struct EtaTarget {
    double percent;
    double tolerance;
};

struct SimulationOptions {
    double guard = 1e3;
    int retry_budget = 100;
    std::optional<EtaTarget> target_eta;
};

struct SimulationResult {
    Trajectory trajectory;
    /// Realized noise level, NaN when the series is too short to have a spread.
    double eta;
    /// Realizations discarded for escaping the guard or missing the eta band.
    int rejections;
};

/// Iterates x_i = g(x_{i-1}, ..., x_{i-d}) + e_i, restarting with fresh noise
/// when the orbit leaves [-guard, guard] or misses the requested noise level.
SimulationResult simulate(const PolynomialMap& map, const MixtureNoise& noise, std::size_t n,
                          std::span<const double> initial, Rng& rng,
                          const SimulationOptions& options = {});

}  // namespace dnrr
