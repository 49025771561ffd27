#include <doctest.h>

#include <cmath>

#include "dnrr/errors.hpp"
#include "dnrr/gsbr.hpp"
#include "oracles/gibbs_oracle.hpp"
#include "support.hpp"

using namespace dnrr;
using namespace dnrr::gsbr;

namespace {

ReconState uniform_state(std::size_t n, int level, double p) {
    ReconState s;
    s.p = p;
    s.levels.assign(n, level);
    s.allocations.assign(n, 1);
    s.lambdas.assign(static_cast<std::size_t>(level), 1.0);
    return s;
}

}  // namespace

TEST_CASE("levels follow the shifted geometric law") {
    Rng rng(1);
    auto s = uniform_state(1, 1, 0.5);
    std::vector<double> counts(8, 0.0);
    const int draws = 100000;
    for (int t = 0; t < draws; ++t) {
        update_levels(s, rng);
        if (s.levels[0] < 8) counts[static_cast<std::size_t>(s.levels[0])] += 1.0;
    }
    for (int k = 1; k < 8; ++k) CHECK(counts[static_cast<std::size_t>(k)] / draws == doctest::Approx(std::pow(0.5, k)).epsilon(0.05));

    auto q = uniform_state(1, 1, 0.25);
    q.allocations[0] = 1;
    double excess = 0.0;
    for (int t = 0; t < draws; ++t) {
        update_levels(q, rng);
        excess += q.levels[0] - q.allocations[0];
    }
    CHECK(excess / draws == doctest::Approx(3.0).epsilon(0.03));

    auto r = uniform_state(4, 3, 1.0 - 1e-12);
    r.allocations = {1, 2, 3, 2};
    update_levels(r, rng);
    CHECK(r.levels == r.allocations);
}

TEST_CASE("allocations") {
    Rng rng(2);
    const Trajectory x{{0.0, 0.0}, {0.0}, {}};
    const ReconModel model(x, PolynomialMap::full(1, 1));
    Priors pr;

    auto s = uniform_state(2, 1, 0.5);
    s.theta = {0.0, 0.0};
    s.initial = {0.0};
    update_allocations(s, model, pr, rng);
    CHECK(s.allocations == std::vector<int>{1, 1});

    // Zero residual, lambda = (1, 100): P(d = 2) = 10/11.
    s.levels = {2, 2};
    s.lambdas = {1.0, 100.0};
    int twos = 0;
    const int draws = 100000;
    for (int t = 0; t < draws; ++t) {
        update_allocations(s, model, pr, rng);
        twos += s.allocations[0] == 2;
        for (std::size_t i = 0; i < 2; ++i) CHECK_FALSE(s.allocations[i] > s.levels[i]);
    }
    CHECK(static_cast<double>(twos) / draws == doctest::Approx(10.0 / 11.0).epsilon(0.01));

    s.lambdas = {4.0, 4.0};
    twos = 0;
    for (int t = 0; t < draws; ++t) {
        update_allocations(s, model, pr, rng);
        twos += s.allocations[1] == 2;
    }
    CHECK(static_cast<double>(twos) / draws == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("precisions") {
    Rng rng(3);
    const Trajectory x{{0.0, 0.0, 1.0}, {0.0}, {}};
    const ReconModel model(x, PolynomialMap::full(1, 1));
    Priors pr;
    auto s = uniform_state(3, 2, 0.5);
    s.levels = {2, 2, 2};
    s.allocations = {1, 1, 2};
    s.theta = {0.0, 0.0};
    s.initial = {0.0};
    // Component 1: two zero residuals. Component 2: one residual 1.
    double m1 = 0.0, m2 = 0.0;
    const int draws = 100000;
    for (int t = 0; t < draws; ++t) {
        update_lambdas(s, model, pr, rng);
        m1 += s.lambdas[0];
        m2 += s.lambdas[1];
    }
    CHECK(m1 / draws == doctest::Approx((pr.b1 + 1.0) / pr.b2).epsilon(0.01));
    CHECK(m2 / draws == doctest::Approx((pr.b1 + 0.5) / (pr.b2 + 0.5)).epsilon(0.01));

    // Lists grow with prior draws and shrink back to N*.
    s.levels = {5, 2, 2};
    s.lambdas = {1.0};
    update_lambdas(s, model, pr, rng);
    CHECK(s.lambdas.size() == 5);
    s.levels = {2, 2, 2};
    update_lambdas(s, model, pr, rng);
    CHECK(s.lambdas.size() == 2);
    for (double l : s.lambdas) CHECK(l > 0.0);
}

TEST_CASE("geometric probability") {
    Rng rng(4);
    Priors pr;
    auto s = uniform_state(10, 1, 0.5);
    double m = 0.0;
    const int draws = 100000;
    for (int t = 0; t < draws; ++t) {
        update_p(s, pr, rng);
        m += s.p;
        CHECK(s.p > 0.0);
        CHECK(s.p < 1.0);
    }
    CHECK(m / draws == doctest::Approx((pr.a1 + 20.0) / (pr.a1 + 20.0 + pr.a2)).epsilon(0.01));

    s.levels = {1, 4, 2, 1, 1, 3, 1, 1, 1, 2};
    const double b = pr.a2 + 7.0;
    m = 0.0;
    for (int t = 0; t < draws; ++t) {
        update_p(s, pr, rng);
        m += s.p;
    }
    CHECK(m / draws == doctest::Approx((pr.a1 + 20.0) / (pr.a1 + 20.0 + b)).epsilon(0.01));

    auto empty = uniform_state(0, 1, 0.5);
    m = 0.0;
    for (int t = 0; t < draws; ++t) {
        update_p(empty, pr, rng);
        m += empty.p;
    }
    CHECK(m / draws == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("every conditional matches grid normalization") {
    const auto rep = oracle::check_conditionals(100000, 2017);
    CHECK(rep.levels < 0.02);
    CHECK(rep.allocations < 0.02);
    CHECK(rep.lambdas < 0.02);
    CHECK(rep.p < 0.02);
    CHECK(rep.tau < 0.02);
}

TEST_CASE("theta conditional mean equals weighted least squares") {
    CHECK(oracle::wls_max_gap(20, 77) < 1e-8);
    CHECK(oracle::wls_max_gap(200, 78) < 1e-8);
}

TEST_CASE("theta conditional basics") {
    const Trajectory x{{1.7, 1.7}, {0.0}, {}};
    PolynomialMap constant(1, {{0}}, {0.0});
    const ReconModel model(x, constant);
    auto s = uniform_state(2, 1, 0.5);
    s.lambdas = {3.0};
    s.theta = {0.0};
    s.initial = {0.0};
    const auto c = theta_conditional(s, model);
    CHECK(c.mean(0) == doctest::Approx(1.7));
    CHECK(c.precision(0, 0) == doctest::Approx(6.0));
    s.lambdas = {3000.0};
    CHECK(theta_conditional(s, model).precision(0, 0) == doctest::Approx(6000.0));

    // Constant series under a linear model: the slope is unidentified.
    const Trajectory flat{{0.5, 0.5, 0.5}, {0.5}, {}};
    const ReconModel degenerate(flat, PolynomialMap::full(1, 1));
    auto t = uniform_state(3, 1, 0.5);
    t.theta = {0.0, 0.0};
    t.initial = {0.5};
    CHECK_THROWS_AS(theta_conditional(t, degenerate), RankDeficiency);
}

TEST_CASE("theta draws have the conditional moments") {
    Rng rng(9);
    std::vector<double> x(30);
    for (double& v : x) v = draw_normal(rng);
    const ReconModel model(Trajectory{x, {0.1}, {}}, PolynomialMap::full(1, 1));
    auto s = uniform_state(30, 1, 0.5);
    s.lambdas = {4.0};
    s.theta = {0.0, 0.0};
    s.initial = {0.1};
    const auto c = theta_conditional(s, model);
    const Eigen::MatrixXd cov = c.precision.inverse();
    std::vector<double> t0;
    for (int t = 0; t < 20000; ++t) {
        update_theta(s, model, rng);
        t0.push_back(s.theta[0]);
    }
    CHECK(testing::ks_normal(t0, c.mean(0), std::sqrt(cov(0, 0))) < 0.02);
}

TEST_CASE("initial block update targets its Gaussian factor") {
    // d = 1, g(z) = 0.2 + 0.8 z: x_0 enters only r_1 = x_1 - 0.2 - 0.8 x_0.
    Rng rng(12);
    const Trajectory x{{0.9, 0.1, -0.3}, {0.0}, {}};
    const ReconModel model(x, PolynomialMap::full(1, 1));
    auto s = uniform_state(3, 1, 0.5);
    s.lambdas = {25.0};
    s.theta = {0.2, 0.8};
    s.initial = {0.0};
    const double mean = (0.9 - 0.2) / 0.8, sd = 1.0 / (0.8 * 5.0);
    std::vector<double> kept;
    for (int t = 0; t < 1000 + 10000 * 20; ++t) {
        update_initial(s, model, rng, 0.25);
        if (t >= 1000 && t % 20 == 0) kept.push_back(s.initial[0]);
    }
    CHECK(testing::ks_normal(kept, mean, sd) < 0.05);

    double last = 1.0;
    for (double step : {0.01, 0.1, 1.0}) {
        s.initial = {mean};
        int acc = 0;
        for (int t = 0; t < 20000; ++t) acc += update_initial(s, model, rng, step);
        const double rate = acc / 20000.0;
        CHECK(rate < last);
        last = rate;
    }

    s.initial = {0.3};
    CHECK(update_initial(s, model, rng, 0.0) == 1);
    CHECK(s.initial[0] == 0.3);
}

TEST_CASE("predictive weights and draws") {
    auto s = uniform_state(1, 3, 0.4);
    const auto w = predictive_weights(s);
    REQUIRE(w.size() == 3);
    CHECK(w[0] == doctest::Approx(0.4));
    CHECK(w[1] == doctest::Approx(0.24));
    CHECK(w[2] == doctest::Approx(0.144 + 0.216));
    CHECK(w[0] > w[1]);

    Rng rng(6);
    s.lambdas = {100.0, 1.0, 0.25};
    std::vector<double> z;
    for (int t = 0; t < 100000; ++t) z.push_back(sample_noise_predictive(s, rng));
    CHECK(testing::variance(z) == doctest::Approx(w[0] / 100.0 + w[1] + w[2] / 0.25).epsilon(0.03));

    auto one = uniform_state(1, 1, 0.4);
    one.lambdas = {4.0};
    z.clear();
    for (int t = 0; t < 20000; ++t) z.push_back(sample_noise_predictive(one, rng));
    CHECK(testing::ks_normal(z, 0.0, 0.5) < 0.02);

    auto sure = uniform_state(1, 3, 1.0 - 1e-15);
    sure.lambdas = {1e8, 1.0, 1.0};
    for (int t = 0; t < 1000; ++t) CHECK(std::abs(sample_noise_predictive(sure, rng)) < 1e-2);
}

TEST_CASE("geometric weights decrease") {
    Rng rng(1);
    for (int rep = 0; rep < 100; ++rep) {
        auto s = uniform_state(1, 12, 0.01 + 0.98 * draw_uniform(rng));
        const auto w = predictive_weights(s);
        for (std::size_t j = 1; j + 1 < w.size(); ++j) CHECK(w[j] < w[j - 1]);
    }
}

TEST_CASE("least squares start recovers an exact map") {
    const auto henon = PolynomialMap::full(2, 2, {1.38, 0.0, 0.27, 0.0, -1.0, 0.0});
    Rng rng(5);
    const auto sim = simulate(henon, gaussian_noise(1e-30), 100, std::vector<double>{0.5, 0.5}, rng);
    const ReconModel model(sim.trajectory, PolynomialMap::full(2, 2));
    const auto th = least_squares_theta(model, sim.trajectory.initial);
    const std::vector<double> truth{1.38, 0.0, 0.27, 0.0, -1.0, 0.0};
    for (std::size_t k = 0; k < truth.size(); ++k) CHECK(th[k] == doctest::Approx(truth[k]).epsilon(1e-8));
}

TEST_CASE("state validation") {
    ReconState s;
    s.p = 0.5;
    s.levels = {2};
    s.allocations = {3};
    s.lambdas = {1.0, 1.0, 1.0};
    CHECK_THROWS_AS(s.validate(), ContractViolation);
    s.allocations = {2};
    CHECK_NOTHROW(s.validate());
    Priors pr;
    pr.b1 = 0.0;
    CHECK_THROWS_AS(pr.validate(), ContractViolation);
}
