#include <doctest.h>

#include <cmath>
#include <numbers>

#include "dnrr/errors.hpp"
#include "dnrr/metrics.hpp"
#include "support.hpp"

using namespace dnrr;
using namespace dnrr::metrics;

TEST_CASE("average correction") {
    const std::vector<double> x{0.0, 0.0};
    CHECK(avg_correction(x, x) == 0.0);
    CHECK(avg_correction(x, std::vector<double>{1.0, 1.0}) == 1.0);
    CHECK_THROWS_AS(avg_correction(x, std::vector<double>{1.0}), ContractViolation);
}

TEST_CASE("average correction is a metric") {
    Rng rng(5);
    for (int rep = 0; rep < 200; ++rep) {
        std::vector<double> a(7), b(7), c(7);
        for (int k = 0; k < 7; ++k) {
            a[k] = draw_normal(rng);
            b[k] = draw_normal(rng);
            c[k] = draw_normal(rng);
        }
        CHECK(avg_correction(a, b) == avg_correction(b, a));
        CHECK(avg_correction(a, c) <= avg_correction(a, b) + avg_correction(b, c) + 1e-12);
    }
}

TEST_CASE("average dynamical error") {
    Trajectory z{{3.0, 4.0}, {0.0}, {}};
    CHECK(avg_dynamical_error(z, PolynomialMap::full(1, 1)) == doctest::Approx(std::sqrt(12.5)));

    const auto henon = PolynomialMap::full(2, 2, {1.38, 0.0, 0.27, 0.0, -1.0, 0.0});
    Trajectory det{{}, {0.5, 0.5}, {}};
    double a = 0.5, b = 0.5;
    for (int i = 0; i < 50; ++i) {
        const double v = 1.38 - a * a + 0.27 * b;
        det.values.push_back(v);
        b = a;
        a = v;
    }
    CHECK(avg_dynamical_error(det, henon) < 1e-14);
    Trajectory missing{{1.0}, {0.5}, {}};
    CHECK_THROWS_AS(avg_dynamical_error(missing, henon), ContractViolation);
}

TEST_CASE("relative reduction") {
    CHECK(relative_reduction(0.3, 0.3) == 0.0);
    CHECK(relative_reduction(0.00286, 0.02932) == doctest::Approx(0.9023).epsilon(5e-4));
    CHECK(relative_reduction(0.00710, 0.02932) == doctest::Approx(0.7577).epsilon(5e-4));
    CHECK_THROWS_AS(relative_reduction(0.1, 0.0), ContractViolation);
    Rng rng(2);
    for (int rep = 0; rep < 100; ++rep) {
        const double a = draw_uniform(rng), b = 0.01 + draw_uniform(rng);
        CHECK(relative_reduction(a, b) + a / b == doctest::Approx(1.0).epsilon(1e-15));
    }
}

TEST_CASE("noise level") {
    const std::vector<double> s{1.0, 2.0, 4.0, 8.0};
    CHECK(noise_level(0.0, s) == 0.0);
    CHECK(noise_level(sample_sd(s), s) == doctest::Approx(100.0));
    std::vector<double> shifted = s;
    for (double& v : shifted) v += 17.25;
    CHECK(noise_level(0.3, shifted) == doctest::Approx(noise_level(0.3, s)).epsilon(1e-14));
    CHECK_THROWS_AS(noise_level(0.1, std::vector<double>{2.0, 2.0}), ContractViolation);
}

TEST_CASE("tail flatness closed form") {
    CHECK(tail_flatness(gaussian_noise(3.0)) == doctest::Approx(std::sqrt(2.0 / std::numbers::pi)));
    const double expect[] = {0.58, 0.53, 0.49, 0.46};
    for (int l = 1; l <= 4; ++l) CHECK(std::abs(tail_flatness(two_scale_noise(l, 1e-4)) - expect[l - 1]) <= 0.005);
}

TEST_CASE("tail flatness against simulation") {
    Rng rng(31);
    for (int l = 1; l <= 4; ++l) {
        const auto f = two_scale_noise(l, 1e-4);
        const auto z = sample_noise(f, 1000000, rng);
        std::vector<double> absz(z.size());
        for (std::size_t i = 0; i < z.size(); ++i) absz[i] = std::abs(z[i]);
        const double tf = testing::mean(absz) / f.sd();
        const double se = std::sqrt(testing::variance(absz) / absz.size()) / f.sd();
        CHECK(std::abs(tf - tail_flatness(f)) < 3.0 * se);
    }
}

TEST_CASE("mixtures never exceed the normal tail flatness") {
    Rng rng(8);
    const double normal = std::sqrt(2.0 / std::numbers::pi);
    for (int rep = 0; rep < 500; ++rep) {
        const int m = 1 + static_cast<int>(draw_uniform(rng) * 5);
        std::vector<double> w(m), v(m);
        double total = 0.0;
        for (int k = 0; k < m; ++k) {
            w[k] = 0.05 + draw_uniform(rng);
            total += w[k];
            v[k] = std::exp(6.0 * draw_normal(rng));
        }
        for (double& x : w) x /= total;
        CHECK(tail_flatness(MixtureNoise(w, v)) <= normal + 1e-12);
    }
}

TEST_CASE("PARE") {
    const auto same = pare(std::vector<double>{1.0, -2.0}, std::vector<double>{1.0, -2.0});
    CHECK(same.mean == 0.0);
    CHECK(same.l2 == 0.0);
    const auto one = pare(std::vector<double>{2.1}, std::vector<double>{2.0});
    CHECK(one.per_coefficient[0] == doctest::Approx(5.0));
    CHECK(one.l2 == doctest::Approx(0.1));
    const auto zero = pare(std::vector<double>{0.003, 1.0}, std::vector<double>{0.0, 1.0});
    CHECK(zero.absolute == std::vector<bool>{true, false});
    CHECK(zero.per_coefficient[0] == doctest::Approx(0.3));
    CHECK(zero.mean == doctest::Approx(0.15));
    CHECK_THROWS_AS(pare(std::vector<double>{1.0}, std::vector<double>{1.0, 2.0}), ContractViolation);
}

TEST_CASE("indeterminism trace") {
    const auto g = PolynomialMap::full(1, 1);  // g == 0
    Trajectory z{{0.01, 0.0, -1e-3}, {0.0}, {}};
    const auto t = indeterminism_trace(z, g);
    CHECK(t[0] == doctest::Approx(-2.0));
    CHECK(t[1] == kLog10Floor);
    CHECK(t[2] == doctest::Approx(-3.0));
}

TEST_CASE("indeterminism trace reproduces the dynamical error") {
    Rng rng(4);
    const auto henon = PolynomialMap::full(2, 2, {1.38, 0.0, 0.27, 0.0, -1.0, 0.0});
    const auto sim = simulate(henon, two_scale_noise(2, 0.3e-4), 300, std::vector<double>{0.5, 0.5}, rng);
    const auto t = indeterminism_trace(sim.trajectory, henon);
    double s = 0.0;
    for (double v : t) s += std::pow(10.0, 2.0 * v);
    CHECK(std::sqrt(s / t.size()) == doctest::Approx(avg_dynamical_error(sim.trajectory, henon)).epsilon(1e-12));
}

TEST_CASE("spearman with ties") {
    const std::vector<double> a{1, 2, 3, 4, 5};
    CHECK(spearman(a, std::vector<double>{2, 4, 6, 8, 10}) == doctest::Approx(1.0));
    CHECK(spearman(a, std::vector<double>{5, 4, 3, 2, 1}) == doctest::Approx(-1.0));
    // Average ranks (1.5, 1.5, 3, 4, 5) against (1..5): Pearson of ranks.
    CHECK(spearman(a, std::vector<double>{0, 0, 1, 2, 3}) == doctest::Approx(0.9746794344808963));
}

TEST_CASE("report JSON round trip") {
    NoiseReductionReport r;
    r.e0 = 0.0428;
    r.edyn_x = 0.02932;
    r.edyn_y = 0.00286;
    r.rdyn = relative_reduction(r.edyn_y, r.edyn_x);
    r.eta = 3.01;
    r.pare_x = {0.1, 0.2};
    r.indeterminism_trace_y = {-2.5, -16.0};
    const auto back = report_from_json(to_json(r));
    CHECK(back.e0 == r.e0);
    CHECK(back.rdyn == r.rdyn);
    CHECK(back.pare_x == r.pare_x);
    CHECK(back.indeterminism_trace_y == r.indeterminism_trace_y);
}
