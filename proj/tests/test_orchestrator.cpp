#include <doctest.h>

#include <cmath>

#include "dnrr/errors.hpp"
#include "dnrr/io.hpp"
#include "dnrr/orchestrator.hpp"
#include "support.hpp"

using namespace dnrr;

namespace {

const auto kHenon = PolynomialMap::full(2, 2, {1.38, 0.0, 0.27, 0.0, -1.0, 0.0});

Trajectory henon_series(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    return simulate(kHenon, two_scale_noise(1, 0.21e-4), n, std::vector<double>{0.5, 0.5}, rng).trajectory;
}

ChainConfig short_config(std::uint64_t seed) {
    ChainConfig c;
    c.iterations = 3000;
    c.burn_in = 1000;
    c.thin = 10;
    c.seed = seed;
    return c;
}

}  // namespace

TEST_CASE("stored draw counts") {
    const auto x = henon_series(120, 1);
    const auto model = PolynomialMap::full(2, 2);
    ChainConfig c = short_config(3);
    c.iterations = 101;
    c.burn_in = 100;
    c.thin = 1;
    const auto one = run_chain(x, model, c);
    CHECK(one.draws() == 1);
    CHECK(one.y_draws.rows() == 1);

    c.iterations = 1234;
    c.burn_in = 200;
    c.thin = 7;
    const auto chain = run_chain(x, model, c);
    CHECK(chain.draws() == (1234 - 200) / 7);
    CHECK(chain.draws() == c.stored_draws());
    CHECK(static_cast<std::size_t>(chain.tau_draws.size()) == chain.draws());
    CHECK(static_cast<std::size_t>(chain.p_draws.size()) == chain.draws());
    CHECK(static_cast<std::size_t>(chain.noise_predictive_draws.size()) == chain.draws());
    CHECK(static_cast<std::size_t>(chain.nstar_trace.size()) == chain.draws());
    CHECK(chain.y_draws.cols() == 120);
    CHECK(chain.nstar_trace.minCoeff() >= 1.0);
    CHECK(chain.site_acceptance.size() == 120);
}

TEST_CASE("invalid configurations") {
    ChainConfig c;
    c.iterations = 10;
    c.burn_in = 10;
    CHECK_THROWS_AS(c.validate(), ContractViolation);
    c.burn_in = 5;
    c.thin = 0;
    CHECK_THROWS_AS(c.validate(), ContractViolation);
    c.thin = 1;
    c.rho = 0.0;
    CHECK_THROWS_AS(c.validate(), ContractViolation);
    const auto x = henon_series(50, 1);
    CHECK_THROWS_AS(run_chain(x, PolynomialMap::full(1, 2), short_config(1)), ContractViolation);
}

TEST_CASE("same seed gives an identical chain") {
    const auto x = henon_series(150, 2);
    const auto model = PolynomialMap::full(2, 2);
    const auto a = run_chain(x, model, short_config(11));
    const auto b = run_chain(x, model, short_config(11));
    CHECK(a.theta_draws == b.theta_draws);
    CHECK(a.y_draws == b.y_draws);
    CHECK(a.tau_draws == b.tau_draws);
    CHECK(a.noise_predictive_draws == b.noise_predictive_draws);
    const auto c = run_chain(x, model, short_config(12));
    CHECK(a.theta_draws != c.theta_draws);
}

TEST_CASE("reconstruction never sees the replica") {
    const auto x = henon_series(150, 3);
    const auto model = PolynomialMap::full(2, 2);
    auto c = short_config(21);
    const auto full = run_chain(x, model, c);
    c.replicate = false;
    const auto recon = run_chain(x, model, c);
    CHECK(full.theta_draws == recon.theta_draws);
    CHECK(full.p_draws == recon.p_draws);
    CHECK(full.initial_draws == recon.initial_draws);
    CHECK(full.noise_predictive_draws == recon.noise_predictive_draws);
    CHECK(recon.y_draws.size() == 0);
    c.replicate = true;
    c.rho = 5e5;
    const auto other_rho = run_chain(x, model, c);
    CHECK(other_rho.theta_draws == full.theta_draws);
}

TEST_CASE("independent seeds agree on theta") {
    const auto x = henon_series(300, 4);
    const auto model = PolynomialMap::full(2, 2);
    auto c = short_config(31);
    c.replicate = false;
    c.iterations = 20000;
    c.burn_in = 5000;
    const auto a = run_chain(x, model, c);
    c.seed = 32;
    const auto b = run_chain(x, model, c);
    const Eigen::VectorXd ma = a.theta_mean(), mb = b.theta_mean();
    for (Eigen::Index k = 0; k < ma.size(); ++k) {
        const Eigen::VectorXd col = a.theta_draws.col(k);
        const double sd = std::sqrt((col.array() - ma(k)).square().sum() / (col.size() - 1));
        CHECK(std::abs(ma(k) - mb(k)) < 3.0 * sd);
    }
}

TEST_CASE("replicated runs") {
    const auto x = henon_series(120, 5);
    const auto model = PolynomialMap::full(2, 2);
    auto c = short_config(41);
    const auto single = run_chain(x, model, c);
    const auto grid = run_replicated(x, model, {c});
    REQUIRE(grid.size() == 1);
    REQUIRE(grid[0].chain);
    CHECK(grid[0].chain->theta_draws == single.theta_draws);
    CHECK(grid[0].chain->y_draws == single.y_draws);

    auto bad = c;
    bad.burn_in = bad.iterations;
    auto other = c;
    other.rho = 1e4;
    const auto mixed = run_replicated(x, model, {bad, other}, 2);
    REQUIRE(mixed.size() == 2);
    CHECK_FALSE(mixed[0].chain);
    CHECK_FALSE(mixed[0].error.empty());
    CHECK(mixed[1].chain);
    CHECK(mixed[1].rho == 1e4);
}

TEST_CASE("chain files are reproducible and load back") {
    const auto x = henon_series(100, 6);
    const auto model = PolynomialMap::full(2, 2);
    const auto c = short_config(51);
    const auto dir = testing::scratch_dir("chain-save");
    const auto a = run_chain(x, model, c);
    save_chain(dir / "a", a, c, model, x);
    save_chain(dir / "b", run_chain(x, model, c), c, model, x);
    for (const auto& entry : std::filesystem::directory_iterator(dir / "a")) {
        const auto name = entry.path().filename();
        CAPTURE(name.string());
        CHECK(io::read_text(dir / "a" / name) == io::read_text(dir / "b" / name));
    }

    const auto loaded = load_chain(dir / "a");
    CHECK(loaded.chain.theta_draws == a.theta_draws);
    CHECK(loaded.chain.y_draws == a.y_draws);
    CHECK(loaded.chain.tau_draws == a.tau_draws);
    CHECK(loaded.chain.site_acceptance == a.site_acceptance);
    CHECK(loaded.chain.final_nu == a.final_nu);
    CHECK(loaded.data.values == x.values);
    CHECK(loaded.config.seed == c.seed);
    CHECK(loaded.config.rho == c.rho);
    CHECK(loaded.model.size() == model.size());

    io::write_text(dir / "a" / "tau.csv", io::read_text(dir / "a" / "tau.csv") + "1\n");
    CHECK_THROWS_WITH_AS(load_chain(dir / "a"), doctest::Contains("hash mismatch"), IoError);
    CHECK_THROWS_WITH_AS(load_chain(dir / "missing"), doctest::Contains("no chain found"), IoError);
}

TEST_CASE("config JSON round trip") {
    ChainConfig c = ChainConfig::desk();
    c.seed = 987654321987654321ULL;
    c.rho = 5e5;
    c.priors.gamma1 = 7.0;
    const auto back = config_from_json(config_to_json(c));
    CHECK(back.iterations == c.iterations);
    CHECK(back.burn_in == c.burn_in);
    CHECK(back.seed == c.seed);
    CHECK(back.rho == c.rho);
    CHECK(back.priors.gamma1 == 7.0);
    CHECK(ChainConfig::paper().iterations == 250000);
    CHECK(ChainConfig::paper().burn_in == 50000);
}
