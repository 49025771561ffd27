#include "dnrr/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>

#include "dnrr/errors.hpp"
#include "dnrr/metrics.hpp"

namespace dnrr {

namespace {

void enumerate_degree(int lag, int remaining, int var, Exponents& current,
                      std::vector<Exponents>& out) {
    if (var == lag - 1) {
        current[var] = remaining;
        out.push_back(current);
        return;
    }
    for (int e = remaining; e >= 0; --e) {
        current[var] = e;
        enumerate_degree(lag, remaining - e, var + 1, current, out);
    }
    current[var] = 0;
}

}  // namespace

PolynomialMap::PolynomialMap(int lag, std::vector<Exponents> basis, std::vector<double> coefficients)
    : lag_(lag), basis_(std::move(basis)), coefficients_(std::move(coefficients)) {
    if (lag_ < 1) throw ContractViolation("PolynomialMap: lag must be positive");
    if (basis_.empty()) throw ContractViolation("PolynomialMap: empty basis");
    std::set<Exponents> seen;
    for (const auto& e : basis_) {
        if (static_cast<int>(e.size()) != lag_)
            throw ContractViolation("PolynomialMap: exponent vector length differs from lag");
        if (std::any_of(e.begin(), e.end(), [](int v) { return v < 0; }))
            throw ContractViolation("PolynomialMap: negative exponent");
        if (!seen.insert(e).second) throw ContractViolation("PolynomialMap: duplicate monomial");
        degree_ = std::max(degree_, std::accumulate(e.begin(), e.end(), 0));
    }
    if (coefficients_.empty()) coefficients_.assign(basis_.size(), 0.0);
    if (coefficients_.size() != basis_.size())
        throw ContractViolation("PolynomialMap: coefficient count differs from basis size");
}

PolynomialMap PolynomialMap::full(int lag, int degree, std::vector<double> coefficients) {
    if (lag < 1 || degree < 1) throw ContractViolation("PolynomialMap::full: lag and degree must be positive");
    std::vector<Exponents> basis;
    for (int deg = 0; deg <= degree; ++deg) {
        std::vector<Exponents> level;
        Exponents current(static_cast<std::size_t>(lag), 0);
        enumerate_degree(lag, deg, 0, current, level);
        // enumerate_degree yields descending lexicographic order; a stable sort
        // on the largest exponent keeps that as the tie-break.
        std::stable_sort(level.begin(), level.end(), [](const Exponents& a, const Exponents& b) {
            return *std::max_element(a.begin(), a.end()) < *std::max_element(b.begin(), b.end());
        });
        basis.insert(basis.end(), level.begin(), level.end());
    }
    return PolynomialMap(lag, std::move(basis), std::move(coefficients));
}

void PolynomialMap::set_coefficients(std::span<const double> coefficients) {
    if (coefficients.size() != basis_.size())
        throw ContractViolation("PolynomialMap: coefficient count differs from basis size");
    coefficients_.assign(coefficients.begin(), coefficients.end());
}

void PolynomialMap::eval_basis(std::span<const double> window, std::span<double> out) const {
    if (static_cast<int>(window.size()) != lag_)
        throw ContractViolation("eval_basis: window length differs from lag");
    if (out.size() != basis_.size()) throw ContractViolation("eval_basis: output size differs from basis");
    for (std::size_t k = 0; k < basis_.size(); ++k) {
        double v = 1.0;
        const Exponents& e = basis_[k];
        for (int j = 0; j < lag_; ++j)
            for (int p = 0; p < e[j]; ++p) v *= window[j];
        out[k] = v;
    }
}

std::vector<double> PolynomialMap::eval_basis(std::span<const double> window) const {
    std::vector<double> out(basis_.size());
    eval_basis(window, out);
    return out;
}

double PolynomialMap::operator()(std::span<const double> window) const {
    if (static_cast<int>(window.size()) != lag_)
        throw ContractViolation("eval_map: window length differs from lag");
    double sum = 0.0;
    for (std::size_t k = 0; k < basis_.size(); ++k) {
        double v = coefficients_[k];
        const Exponents& e = basis_[k];
        for (int j = 0; j < lag_; ++j)
            for (int p = 0; p < e[j]; ++p) v *= window[j];
        sum += v;
    }
    return sum;
}

std::string PolynomialMap::describe() const {
    std::ostringstream os;
    os.precision(17);
    os << "lag=" << lag_ << " degree=" << degree_ << " coefficients=";
    for (std::size_t k = 0; k < coefficients_.size(); ++k) os << (k ? ";" : "") << coefficients_[k];
    return os.str();
}

std::vector<double> eval_basis(const PolynomialMap& map, std::span<const double> window) {
    return map.eval_basis(window);
}

double eval_map(const PolynomialMap& map, std::span<const double> window) { return map(window); }

MixtureNoise::MixtureNoise(std::vector<double> weights, std::vector<double> variances)
    : weights_(std::move(weights)), variances_(std::move(variances)) {
    if (weights_.empty() || weights_.size() != variances_.size())
        throw ContractViolation("MixtureNoise: weights and variances must be nonempty and equally long");
    double total = 0.0;
    for (double w : weights_) {
        if (!(w >= 0.0)) throw ContractViolation("MixtureNoise: negative weight");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-12) throw ContractViolation("MixtureNoise: weights must sum to 1");
    for (double v : variances_)
        if (!(v > 0.0) || !std::isfinite(v)) throw ContractViolation("MixtureNoise: variances must be positive");
}

double MixtureNoise::variance() const {
    double v = 0.0;
    for (std::size_t j = 0; j < weights_.size(); ++j) v += weights_[j] * variances_[j];
    return v;
}

double MixtureNoise::sd() const { return std::sqrt(variance()); }

double MixtureNoise::density(double z) const {
    double f = 0.0;
    for (std::size_t j = 0; j < weights_.size(); ++j)
        f += weights_[j] * std::exp(-0.5 * z * z / variances_[j]) /
             std::sqrt(2.0 * std::numbers::pi * variances_[j]);
    return f;
}

std::string MixtureNoise::describe() const {
    std::ostringstream os;
    os.precision(17);
    os << "weights=";
    for (std::size_t k = 0; k < weights_.size(); ++k) os << (k ? ";" : "") << weights_[k];
    os << " variances=";
    for (std::size_t k = 0; k < variances_.size(); ++k) os << (k ? ";" : "") << variances_[k];
    return os.str();
}

MixtureNoise gaussian_noise(double sigma2) { return MixtureNoise({1.0}, {sigma2}); }

MixtureNoise two_scale_noise(int l, double sigma2) {
    if (l < 1 || l > 4) throw ContractViolation("two_scale_noise: l must lie in 1..4");
    return MixtureNoise({(5.0 + l) / 10.0, (5.0 - l) / 10.0}, {sigma2, 100.0 * sigma2});
}

std::vector<double> sample_noise(const MixtureNoise& noise, std::size_t count, Rng& rng) {
    std::vector<double> out;
    out.reserve(count);
    const auto& w = noise.weights();
    std::vector<double> sds(noise.variances().size());
    std::transform(noise.variances().begin(), noise.variances().end(), sds.begin(),
                   [](double v) { return std::sqrt(v); });
    for (std::size_t i = 0; i < count; ++i) {
        double u = draw_uniform(rng);
        std::size_t j = 0;
        double acc = w[0];
        while (u >= acc && j + 1 < w.size()) acc += w[++j];
        out.push_back(draw_normal(rng, 0.0, sds[j]));
    }
    return out;
}

void window_at(std::span<const double> values, std::span<const double> initial, std::size_t i,
               std::span<double> window) {
    const long d = static_cast<long>(initial.size());
    for (long k = 1; k <= d; ++k)
        window[static_cast<std::size_t>(k - 1)] = value_at(values, initial, static_cast<long>(i) - k);
}

std::vector<double> residuals(const PolynomialMap& map, std::span<const double> values,
                              std::span<const double> initial) {
    if (static_cast<int>(initial.size()) != map.lag())
        throw ContractViolation("residuals: initial block length differs from lag");
    std::vector<double> r(values.size());
    std::vector<double> window(initial.size());
    for (std::size_t i = 1; i <= values.size(); ++i) {
        window_at(values, initial, i, window);
        r[i - 1] = values[i - 1] - map(window);
    }
    return r;
}

SimulationResult simulate(const PolynomialMap& map, const MixtureNoise& noise, std::size_t n,
                          std::span<const double> initial, Rng& rng, const SimulationOptions& options) {
    if (static_cast<int>(initial.size()) != map.lag())
        throw ContractViolation("simulate: initial length differs from lag");
    if (!(options.guard > 0.0)) throw ContractViolation("simulate: guard must be positive");

    const std::size_t d = initial.size();
    std::vector<double> window(d);
    int rejections = 0;
    for (int attempt = 0; attempt <= options.retry_budget; ++attempt) {
        std::vector<double> e = sample_noise(noise, n, rng);
        std::vector<double> x(n);
        bool bounded = true;
        for (std::size_t i = 1; i <= n; ++i) {
            window_at(std::span<const double>(x.data(), i - 1), initial, i, window);
            double v = map(window) + e[i - 1];
            if (!(std::abs(v) <= options.guard)) {
                bounded = false;
                break;
            }
            x[i - 1] = v;
        }
        if (!bounded) {
            ++rejections;
            continue;
        }
        double eta = std::numeric_limits<double>::quiet_NaN();
        if (n >= 2 && metrics::sample_sd(x) > 0.0) eta = metrics::noise_level(noise.sd(), x);
        if (options.target_eta && n >= 2) {
            if (!(std::abs(eta - options.target_eta->percent) <= options.target_eta->tolerance)) {
                ++rejections;
                continue;
            }
        }
        Trajectory traj;
        traj.values = std::move(x);
        traj.initial.assign(initial.begin(), initial.end());
        traj.meta["map"] = map.describe();
        traj.meta["noise"] = noise.describe();
        traj.meta["rejections"] = std::to_string(rejections);
        return {std::move(traj), eta, rejections};
    }
    throw RetryExhausted("no bounded realization at this noise level within " +
                         std::to_string(options.retry_budget + 1) + " attempts");
}

}  // namespace dnrr
