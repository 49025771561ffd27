#include "dnrr/replicator.hpp"

#include <cmath>

#include "dnrr/errors.hpp"

namespace dnrr::replicator {

void ReplicaState::validate() const {
    if (!(tau > 0.0) || !(rho > 0.0) || !(nu > 0.0))
        throw ContractViolation("ReplicaState: tau, rho and nu must be positive");
}

namespace {

// Value of y_k with y_j substituted by `candidate`.
inline double replica_value(const ReplicaState& s, long k, long j, double candidate) {
    if (k == j) return candidate;
    return value_at(s.y, s.y_initial, k);
}

inline double residual_at(const ReplicaState& s, const PolynomialMap& map, long i, long j, double candidate,
                          double* window) {
    const long d = map.lag();
    for (long k = 1; k <= d; ++k) window[k - 1] = replica_value(s, i - k, j, candidate);
    return replica_value(s, i, j, candidate) - map(std::span<const double>(window, static_cast<std::size_t>(d)));
}

}  // namespace

double cost(std::size_t j, double candidate, const ReplicaState& state, const PolynomialMap& map,
            std::span<const double> x) {
    const std::size_t n = state.y.size();
    if (j < 1 || j > n) throw ContractViolation("cost: site index out of range");
    if (x.size() != n) throw ContractViolation("cost: x and y lengths differ");
    if (static_cast<int>(state.y_initial.size()) != map.lag())
        throw ContractViolation("cost: initial block length differs from lag");
    double window[16];
    std::vector<double> big;
    double* w = window;
    if (map.lag() > 16) {
        big.resize(static_cast<std::size_t>(map.lag()));
        w = big.data();
    }
    const long jj = static_cast<long>(j);
    const long last = std::min<long>(jj + map.lag(), static_cast<long>(n));
    double dyn = 0.0;
    for (long i = jj; i <= last; ++i) {
        const double r = residual_at(state, map, i, jj, candidate, w);
        dyn += r * r;
    }
    const double dx = candidate - x[j - 1];
    return state.tau * dyn + state.rho * dx * dx;
}

SweepStats mh_sweep(ReplicaState& state, const PolynomialMap& map, std::span<const double> x, Rng& rng,
                    double guard, std::vector<std::uint64_t>* site_accepts) {
    SweepStats stats;
    const std::size_t n = state.y.size();
    if (site_accepts && site_accepts->size() != n) site_accepts->assign(n, 0);
    for (std::size_t j = 1; j <= n; ++j) {
        const double current = state.y[j - 1];
        const double proposal = current + state.nu * draw_normal(rng);
        const double u = draw_uniform(rng);
        ++stats.proposed;
        if (!(std::abs(proposal) <= guard)) continue;
        const double c0 = cost(j, current, state, map, x);
        const double c1 = cost(j, proposal, state, map, x);
        if (!std::isfinite(c0)) throw NumericError("mh_sweep: non-finite cost at site " + std::to_string(j));
        if (std::log(u) < -0.5 * (c1 - c0)) {
            state.y[j - 1] = proposal;
            ++stats.accepted;
            if (site_accepts) ++(*site_accepts)[j - 1];
        }
    }
    return stats;
}

void update_tau(ReplicaState& state, const PolynomialMap& map, const gsbr::Priors& priors, Rng& rng) {
    double ss = 0.0;
    for (double r : residuals(map, state.y, state.y_initial)) ss += r * r;
    const double n = static_cast<double>(state.y.size());
    state.tau = draw_gamma(rng, priors.gamma1 + 0.5 * n, priors.gamma2 + 0.5 * ss);
}

double proximity_probability(std::span<const double> x, std::span<const double> y, double rho) {
    if (x.size() != y.size()) throw ContractViolation("proximity_probability: length mismatch");
    if (!(rho > 0.0)) throw ContractViolation("proximity_probability: rho must be positive");
    double ss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) ss += (x[i] - y[i]) * (x[i] - y[i]);
    return std::exp(-0.5 * rho * ss);
}

double proximity_probability_box(std::span<const double> x, std::span<const double> y,
                                 std::span<const double> radius) {
    if (x.size() != y.size() || x.size() != radius.size())
        throw ContractViolation("proximity_probability_box: length mismatch");
    for (std::size_t i = 0; i < x.size(); ++i)
        if (!(std::abs(x[i] - y[i]) < radius[i])) return 0.0;
    return 1.0;
}

double adapt_nu(double nu, double observed_acceptance, const AcceptanceBand& band) {
    if (observed_acceptance > band.upper) return nu * band.factor;
    if (observed_acceptance < band.lower) return nu / band.factor;
    return nu;
}

}  // namespace dnrr::replicator
