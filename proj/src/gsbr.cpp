#include "dnrr/gsbr.hpp"

#include <algorithm>
#include <cmath>

#include "dnrr/errors.hpp"

namespace dnrr::gsbr {

void Priors::validate() const {
    for (double v : {a1, a2, b1, b2, gamma1, gamma2})
        if (!(v > 0.0) || !std::isfinite(v)) throw ContractViolation("Priors: shape and rate values must be positive");
}

int ReconState::nstar() const {
    return levels.empty() ? 1 : *std::max_element(levels.begin(), levels.end());
}

void ReconState::validate() const {
    if (!(p > 0.0 && p < 1.0)) throw ContractViolation("ReconState: p outside (0, 1)");
    if (allocations.size() != levels.size()) throw ContractViolation("ReconState: allocations/levels length mismatch");
    for (std::size_t i = 0; i < levels.size(); ++i) {
        if (levels[i] < 1) throw ContractViolation("ReconState: level below 1");
        if (allocations[i] < 1 || allocations[i] > levels[i])
            throw ContractViolation("ReconState: allocation outside 1..N_i");
    }
    if (static_cast<int>(lambdas.size()) < nstar()) throw ContractViolation("ReconState: fewer lambdas than N*");
    for (double l : lambdas)
        if (!(l > 0.0)) throw ContractViolation("ReconState: non-positive precision");
}

ReconModel::ReconModel(const Trajectory& x, const PolynomialMap& map) : x_(x), map_(map) {
    if (x.lag() != map.lag()) throw ContractViolation("ReconModel: initial block length differs from lag");
    const std::size_t n = x.values.size();
    const std::size_t d = static_cast<std::size_t>(map.lag());
    design_.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(map.size()));
    std::vector<double> window(d), row(map.size());
    for (std::size_t i = d + 1; i <= n; ++i) {
        window_at(x.values, x.initial, i, window);
        map.eval_basis(window, row);
        for (std::size_t k = 0; k < row.size(); ++k)
            design_(static_cast<Eigen::Index>(i - 1), static_cast<Eigen::Index>(k)) = row[k];
    }
}

Eigen::MatrixXd ReconModel::design(std::span<const double> initial) const {
    Eigen::MatrixXd phi = design_;
    const std::size_t d = static_cast<std::size_t>(map_.lag());
    std::vector<double> window(d), row(map_.size());
    for (std::size_t i = 1; i <= std::min(d, n()); ++i) {
        window_at(x_.values, initial, i, window);
        map_.eval_basis(window, row);
        for (std::size_t k = 0; k < row.size(); ++k)
            phi(static_cast<Eigen::Index>(i - 1), static_cast<Eigen::Index>(k)) = row[k];
    }
    return phi;
}

std::vector<double> ReconModel::residuals(std::span<const double> theta, std::span<const double> initial) const {
    const Eigen::MatrixXd phi = design(initial);
    Eigen::Map<const Eigen::VectorXd> th(theta.data(), static_cast<Eigen::Index>(theta.size()));
    Eigen::VectorXd fitted = phi * th;
    std::vector<double> r(n());
    for (std::size_t i = 0; i < n(); ++i) r[i] = x_.values[i] - fitted(static_cast<Eigen::Index>(i));
    return r;
}

void ensure_lambdas(ReconState& state, const Priors& priors, Rng& rng) {
    const std::size_t nstar = static_cast<std::size_t>(state.nstar());
    while (state.lambdas.size() < nstar) state.lambdas.push_back(draw_gamma(rng, priors.b1, priors.b2));
}

void update_levels(ReconState& state, Rng& rng) {
    for (std::size_t i = 0; i < state.levels.size(); ++i)
        state.levels[i] = state.allocations[i] + static_cast<int>(draw_geometric(rng, state.p));
}

void update_allocations(ReconState& state, const ReconModel& model, const Priors& priors, Rng& rng) {
    ensure_lambdas(state, priors, rng);
    const std::vector<double> r = model.residuals(state.theta, state.initial);
    std::vector<double> logw;
    for (std::size_t i = 0; i < state.allocations.size(); ++i) {
        const int ni = state.levels[i];
        if (ni == 1) {
            state.allocations[i] = 1;
            continue;
        }
        logw.resize(static_cast<std::size_t>(ni));
        double top = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < ni; ++j) {
            const double lam = state.lambdas[static_cast<std::size_t>(j)];
            logw[static_cast<std::size_t>(j)] = 0.5 * std::log(lam) - 0.5 * lam * r[i] * r[i];
            top = std::max(top, logw[static_cast<std::size_t>(j)]);
        }
        double total = 0.0;
        for (double& w : logw) total += (w = std::exp(w - top));
        double u = draw_uniform(rng) * total;
        int pick = ni;
        for (int j = 0; j < ni; ++j) {
            u -= logw[static_cast<std::size_t>(j)];
            if (u < 0.0) {
                pick = j + 1;
                break;
            }
        }
        state.allocations[i] = pick;
    }
}

void update_lambdas(ReconState& state, const ReconModel& model, const Priors& priors, Rng& rng) {
    const std::size_t nstar = static_cast<std::size_t>(state.nstar());
    const std::vector<double> r = model.residuals(state.theta, state.initial);
    std::vector<double> counts(nstar, 0.0), sums(nstar, 0.0);
    for (std::size_t i = 0; i < state.allocations.size(); ++i) {
        const std::size_t j = static_cast<std::size_t>(state.allocations[i] - 1);
        counts[j] += 1.0;
        sums[j] += r[i] * r[i];
    }
    state.lambdas.resize(nstar);
    for (std::size_t j = 0; j < nstar; ++j)
        state.lambdas[j] = draw_gamma(rng, priors.b1 + 0.5 * counts[j], priors.b2 + 0.5 * sums[j]);
}

void update_p(ReconState& state, const Priors& priors, Rng& rng) {
    double excess = 0.0;
    for (int ni : state.levels) excess += ni - 1;
    const double n = static_cast<double>(state.levels.size());
    double p = draw_beta(rng, priors.a1 + 2.0 * n, priors.a2 + excess);
    // Keep p inside the open interval; a Beta draw can round to 0 or 1.
    state.p = std::clamp(p, std::numeric_limits<double>::min(), 1.0 - std::numeric_limits<double>::epsilon());
}

ThetaConditional theta_conditional(const ReconState& state, const ReconModel& model) {
    const Eigen::MatrixXd phi = model.design(state.initial);
    const auto n = static_cast<Eigen::Index>(model.n());
    Eigen::VectorXd w(n);
    for (Eigen::Index i = 0; i < n; ++i)
        w(i) = state.lambdas[static_cast<std::size_t>(state.allocations[static_cast<std::size_t>(i)] - 1)];
    Eigen::Map<const Eigen::VectorXd> x(model.data().values.data(), n);
    ThetaConditional out;
    out.precision = phi.transpose() * w.asDiagonal() * phi;
    Eigen::VectorXd rhs = phi.transpose() * (w.array() * x.array()).matrix();
    Eigen::LLT<Eigen::MatrixXd> llt(out.precision);
    if (llt.info() != Eigen::Success || !(llt.rcond() > 1e-14))
        throw RankDeficiency("theta update: weighted design matrix is rank deficient");
    out.mean = llt.solve(rhs);
    return out;
}

void update_theta(ReconState& state, const ReconModel& model, Rng& rng) {
    ThetaConditional cond = theta_conditional(state, model);
    Eigen::LLT<Eigen::MatrixXd> llt(cond.precision);
    Eigen::VectorXd z(cond.mean.size());
    for (Eigen::Index k = 0; k < z.size(); ++k) z(k) = draw_normal(rng);
    // A = L L^T, so L^{-T} z has covariance A^{-1}.
    Eigen::VectorXd draw = cond.mean + llt.matrixU().solve(z);
    state.theta.assign(draw.data(), draw.data() + draw.size());
}

namespace {

double initial_log_target(const ReconState& state, const ReconModel& model, std::span<const double> initial) {
    const PolynomialMap& map = model.map();
    const std::size_t d = static_cast<std::size_t>(map.lag());
    const auto& values = model.data().values;
    std::vector<double> window(d), row(map.size());
    double lp = 0.0;
    for (std::size_t i = 1; i <= std::min(d, values.size()); ++i) {
        window_at(values, initial, i, window);
        map.eval_basis(window, row);
        double g = 0.0;
        for (std::size_t k = 0; k < row.size(); ++k) g += state.theta[k] * row[k];
        const double r = values[i - 1] - g;
        lp -= 0.5 * state.lambdas[static_cast<std::size_t>(state.allocations[i - 1] - 1)] * r * r;
    }
    return lp;
}

}  // namespace

int update_initial(ReconState& state, const ReconModel& model, Rng& rng, double step) {
    int accepted = 0;
    std::vector<double> proposal = state.initial;
    double current = initial_log_target(state, model, state.initial);
    for (std::size_t k = 0; k < state.initial.size(); ++k) {
        proposal[k] = state.initial[k] + step * draw_normal(rng);
        const double cand = initial_log_target(state, model, proposal);
        if (std::log(draw_uniform(rng)) < cand - current) {
            state.initial[k] = proposal[k];
            current = cand;
            ++accepted;
        } else {
            proposal[k] = state.initial[k];
        }
    }
    return accepted;
}

std::vector<double> predictive_weights(const ReconState& state) {
    const int nstar = state.nstar();
    std::vector<double> w(static_cast<std::size_t>(nstar));
    double tail = 1.0;
    for (int j = 0; j < nstar; ++j) {
        w[static_cast<std::size_t>(j)] = state.p * tail;
        tail *= 1.0 - state.p;
    }
    w.back() += tail;
    return w;
}

double sample_noise_predictive(const ReconState& state, Rng& rng) {
    const std::vector<double> w = predictive_weights(state);
    double u = draw_uniform(rng);
    std::size_t j = 0;
    double acc = w[0];
    while (u >= acc && j + 1 < w.size()) acc += w[++j];
    return draw_normal(rng, 0.0, 1.0 / std::sqrt(state.lambdas[j]));
}

std::vector<double> least_squares_theta(const ReconModel& model, std::span<const double> initial) {
    const Eigen::MatrixXd phi = model.design(initial);
    Eigen::Map<const Eigen::VectorXd> x(model.data().values.data(), static_cast<Eigen::Index>(model.n()));
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(phi);
    if (qr.rank() < phi.cols()) throw RankDeficiency("least squares fit: design matrix is rank deficient");
    Eigen::VectorXd th = qr.solve(x);
    return {th.data(), th.data() + th.size()};
}

}  // namespace dnrr::gsbr
