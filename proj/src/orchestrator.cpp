#include "dnrr/orchestrator.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>

#include <json.hpp>

#include "dnrr/errors.hpp"
#include "dnrr/io.hpp"
#include "dnrr/replicator.hpp"

namespace dnrr {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

ChainConfig ChainConfig::paper() { return ChainConfig{}; }

ChainConfig ChainConfig::desk() {
    ChainConfig c;
    c.iterations = 30000;
    c.burn_in = 10000;
    return c;
}

void ChainConfig::validate() const {
    if (burn_in >= iterations) throw ContractViolation("ChainConfig: burn_in must be smaller than iterations");
    if (thin < 1) throw ContractViolation("ChainConfig: thin must be at least 1");
    if (adaptation_window < 1) throw ContractViolation("ChainConfig: adaptation_window must be at least 1");
    if (!(rho > 0.0)) throw ContractViolation("ChainConfig: rho must be positive");
    if (!(nu_initial >= 0.0)) throw ContractViolation("ChainConfig: nu_initial must be non-negative");
    if (!(initial_step > 0.0)) throw ContractViolation("ChainConfig: initial_step must be positive");
    if (!(guard > 0.0)) throw ContractViolation("ChainConfig: guard must be positive");
    priors.validate();
}

PosteriorChain run_chain(const Trajectory& x, const PolynomialMap& model, const ChainConfig& config) {
    config.validate();
    if (x.lag() != model.lag()) throw ContractViolation("run_chain: trajectory initial block does not match lag");
    if (x.values.size() < static_cast<std::size_t>(model.lag()) || x.values.size() < model.size())
        throw ContractViolation("run_chain: series too short for the model");

    const std::size_t n = x.values.size();
    const std::size_t s = model.size();
    const std::size_t d = static_cast<std::size_t>(model.lag());
    Rng rng_recon(derive_seed(config.seed, 0));
    Rng rng_replica(derive_seed(config.seed, 1));

    gsbr::ReconModel recon(x, model);
    gsbr::ReconState rs;
    rs.initial = x.initial;
    rs.theta = gsbr::least_squares_theta(recon, rs.initial);
    {
        double ss = 0.0;
        for (double r : recon.residuals(rs.theta, rs.initial)) ss += r * r;
        const double var = ss / static_cast<double>(n);
        rs.lambdas = {var > 0.0 ? 1.0 / var : 1.0};
    }
    rs.p = 0.5;
    rs.allocations.assign(n, 1);
    rs.levels.assign(n, 1);

    PolynomialMap current_map = model;
    replicator::ReplicaState ys;
    ys.y = x.values;
    ys.y_initial = rs.initial;
    ys.tau = config.priors.tau_prior_mean();
    ys.rho = config.rho;
    ys.nu = config.nu_initial > 0.0 ? config.nu_initial : 1.0 / std::sqrt(ys.tau);

    const std::size_t stored = config.stored_draws();
    PosteriorChain out;
    out.theta_draws.resize(static_cast<Eigen::Index>(stored), static_cast<Eigen::Index>(s));
    out.initial_draws.resize(static_cast<Eigen::Index>(stored), static_cast<Eigen::Index>(d));
    out.p_draws.resize(static_cast<Eigen::Index>(stored));
    out.noise_predictive_draws.resize(static_cast<Eigen::Index>(stored));
    out.nstar_trace.resize(static_cast<Eigen::Index>(stored));
    if (config.replicate) {
        out.tau_draws.resize(static_cast<Eigen::Index>(stored));
        out.y_draws.resize(static_cast<Eigen::Index>(stored), static_cast<Eigen::Index>(n));
    }

    std::vector<std::uint64_t> site_accepts(n, 0);
    std::uint64_t window_proposed = 0, window_accepted = 0;
    std::uint64_t post_proposed = 0, post_accepted = 0;
    std::uint64_t init_proposed = 0, init_accepted = 0;
    std::size_t row = 0;

    for (std::size_t t = 1; t <= config.iterations; ++t) {
        const bool post = t > config.burn_in;

        // Reconstruction group, given x^n only.
        gsbr::update_levels(rs, rng_recon);
        gsbr::update_allocations(rs, recon, config.priors, rng_recon);
        gsbr::update_lambdas(rs, recon, config.priors, rng_recon);
        const int acc_init = gsbr::update_initial(rs, recon, rng_recon, config.initial_step);
        gsbr::update_theta(rs, recon, rng_recon);
        gsbr::update_p(rs, config.priors, rng_recon);
        const double z = gsbr::sample_noise_predictive(rs, rng_recon);
        if (post) {
            init_proposed += d;
            init_accepted += static_cast<std::uint64_t>(acc_init);
        }

        // Replica group, given the reconstruction group.
        if (config.replicate) {
            current_map.set_coefficients(rs.theta);
            ys.y_initial = rs.initial;
            const auto stats = replicator::mh_sweep(ys, current_map, x.values, rng_replica, config.guard,
                                                    post ? &site_accepts : nullptr);
            replicator::update_tau(ys, current_map, config.priors, rng_replica);
            if (!post) {
                window_proposed += stats.proposed;
                window_accepted += stats.accepted;
                if (t % config.adaptation_window == 0) {
                    ys.nu = replicator::adapt_nu(ys.nu, static_cast<double>(window_accepted) /
                                                            static_cast<double>(std::max<std::uint64_t>(1, window_proposed)));
                    window_proposed = window_accepted = 0;
                }
            } else {
                post_proposed += stats.proposed;
                post_accepted += stats.accepted;
            }
        }

        if (post && (t - config.burn_in) % config.thin == 0 && row < stored) {
            const auto r = static_cast<Eigen::Index>(row);
            for (std::size_t k = 0; k < s; ++k) out.theta_draws(r, static_cast<Eigen::Index>(k)) = rs.theta[k];
            for (std::size_t k = 0; k < d; ++k) out.initial_draws(r, static_cast<Eigen::Index>(k)) = rs.initial[k];
            out.p_draws(r) = rs.p;
            out.noise_predictive_draws(r) = z;
            out.nstar_trace(r) = rs.nstar();
            if (config.replicate) {
                out.tau_draws(r) = ys.tau;
                for (std::size_t i = 0; i < n; ++i) out.y_draws(r, static_cast<Eigen::Index>(i)) = ys.y[i];
            }
            ++row;
        }
    }

    const double post_sweeps = static_cast<double>(config.iterations - config.burn_in);
    if (config.replicate) {
        out.site_acceptance.resize(n);
        for (std::size_t i = 0; i < n; ++i) out.site_acceptance[i] = static_cast<double>(site_accepts[i]) / post_sweeps;
        out.global_acceptance =
            post_proposed ? static_cast<double>(post_accepted) / static_cast<double>(post_proposed) : 0.0;
    }
    out.initial_acceptance =
        init_proposed ? static_cast<double>(init_accepted) / static_cast<double>(init_proposed) : 0.0;
    out.final_nu = ys.nu;
    return out;
}

std::vector<ChainOutcome> run_replicated(const Trajectory& x, const PolynomialMap& model,
                                         const std::vector<ChainConfig>& configs, unsigned jobs) {
    std::vector<ChainOutcome> out(configs.size());
    auto run_one = [&](std::size_t k) {
        out[k].rho = configs[k].rho;
        out[k].seed = configs[k].seed;
        try {
            out[k].chain = run_chain(x, model, configs[k]);
        } catch (const std::exception& e) {
            out[k].error = e.what();
        }
    };
    jobs = std::max(1u, jobs);
    for (std::size_t start = 0; start < configs.size(); start += jobs) {
        std::vector<std::future<void>> batch;
        for (std::size_t k = start; k < std::min(configs.size(), start + jobs); ++k)
            batch.push_back(std::async(jobs == 1 ? std::launch::deferred : std::launch::async, run_one, k));
        for (auto& f : batch) f.get();
    }
    return out;
}

std::string config_to_json(const ChainConfig& c) {
    ordered_json j;
    j["iterations"] = c.iterations;
    j["burn_in"] = c.burn_in;
    j["thin"] = c.thin;
    j["seed"] = c.seed;
    j["rho"] = c.rho;
    j["priors"] = {{"a1", c.priors.a1}, {"a2", c.priors.a2},         {"b1", c.priors.b1},
                   {"b2", c.priors.b2}, {"gamma1", c.priors.gamma1}, {"gamma2", c.priors.gamma2}};
    j["adaptation_window"] = c.adaptation_window;
    j["nu_initial"] = c.nu_initial;
    j["initial_step"] = c.initial_step;
    j["guard"] = c.guard;
    j["replicate"] = c.replicate;
    return j.dump(2);
}

ChainConfig config_from_json(const std::string& text) {
    auto j = nlohmann::json::parse(text);
    ChainConfig c;
    c.iterations = j.value("iterations", c.iterations);
    c.burn_in = j.value("burn_in", c.burn_in);
    c.thin = j.value("thin", c.thin);
    c.seed = j.value("seed", c.seed);
    c.rho = j.value("rho", c.rho);
    if (j.contains("priors")) {
        const auto& p = j["priors"];
        c.priors.a1 = p.value("a1", c.priors.a1);
        c.priors.a2 = p.value("a2", c.priors.a2);
        c.priors.b1 = p.value("b1", c.priors.b1);
        c.priors.b2 = p.value("b2", c.priors.b2);
        c.priors.gamma1 = p.value("gamma1", c.priors.gamma1);
        c.priors.gamma2 = p.value("gamma2", c.priors.gamma2);
    }
    c.adaptation_window = j.value("adaptation_window", c.adaptation_window);
    c.nu_initial = j.value("nu_initial", c.nu_initial);
    c.initial_step = j.value("initial_step", c.initial_step);
    c.guard = j.value("guard", c.guard);
    c.replicate = j.value("replicate", c.replicate);
    return c;
}

namespace {

std::vector<std::string> numbered(const std::string& prefix, std::size_t count, std::size_t first = 0) {
    std::vector<std::string> names;
    for (std::size_t k = 0; k < count; ++k) names.push_back(prefix + std::to_string(k + first));
    return names;
}

Eigen::MatrixXd as_column(const Eigen::VectorXd& v) { return v; }

}  // namespace

void save_chain(const fs::path& dir, const PosteriorChain& chain, const ChainConfig& config,
                const PolynomialMap& model, const Trajectory& x) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create chain directory " + dir.string());

    std::vector<std::pair<std::string, fs::path>> files;
    auto add = [&](const std::string& name) {
        files.emplace_back(name, dir / name);
        return dir / name;
    };
    io::write_trajectory(add("data.csv"), x);
    io::write_matrix_csv(add("theta.csv"), numbered("theta_", model.size()), chain.theta_draws);
    io::write_matrix_csv(add("initial.csv"), numbered("x_minus_", static_cast<std::size_t>(model.lag())),
                         chain.initial_draws);
    io::write_matrix_csv(add("p.csv"), {"p"}, as_column(chain.p_draws));
    io::write_matrix_csv(add("noise_predictive.csv"), {"z"}, as_column(chain.noise_predictive_draws));
    io::write_matrix_csv(add("nstar.csv"), {"nstar"}, as_column(chain.nstar_trace));
    if (config.replicate) {
        io::write_matrix_csv(add("tau.csv"), {"tau"}, as_column(chain.tau_draws));
        io::write_matrix_csv(add("y_draws.csv"), numbered("y_", x.values.size(), 1), chain.y_draws);
        Eigen::MatrixXd acc(static_cast<Eigen::Index>(chain.site_acceptance.size()), 2);
        for (std::size_t i = 0; i < chain.site_acceptance.size(); ++i) {
            acc(static_cast<Eigen::Index>(i), 0) = static_cast<double>(i + 1);
            acc(static_cast<Eigen::Index>(i), 1) = chain.site_acceptance[i];
        }
        io::write_matrix_csv(add("acceptance.csv"), {"site", "rate"}, acc);
    }

    ordered_json m;
    m["format"] = "dnrr-chain-1";
    m["config"] = ordered_json::parse(config_to_json(config));
    m["model"] = {{"lag", model.lag()}, {"degree", model.degree()}, {"basis", model.basis()}};
    m["draws"] = chain.draws();
    m["n"] = x.values.size();
    m["global_acceptance"] = chain.global_acceptance;
    m["initial_acceptance"] = chain.initial_acceptance;
    m["final_nu"] = chain.final_nu;
    ordered_json hashes;
    for (const auto& [name, path] : files) hashes[name] = io::git_blob_hash(io::read_text(path));
    m["files"] = hashes;
    io::write_text(dir / "manifest.json", m.dump(2) + "\n");
}

LoadedChain load_chain(const fs::path& dir) {
    if (!fs::exists(dir / "manifest.json")) throw IoError("no chain found in " + dir.string());
    auto m = nlohmann::json::parse(io::read_text(dir / "manifest.json"));
    LoadedChain out;
    out.config = config_from_json(m.at("config").dump());
    const int lag = m.at("model").at("lag").get<int>();
    auto basis = m.at("model").at("basis").get<std::vector<Exponents>>();
    for (const auto& [name, hash] : m.at("files").items()) {
        if (!fs::exists(dir / name)) throw IoError("chain file missing: " + (dir / name).string());
        if (io::git_blob_hash(io::read_text(dir / name)) != hash.get<std::string>())
            throw IoError("chain file content hash mismatch: " + (dir / name).string());
    }
    out.data = io::read_trajectory(dir / "data.csv");
    PosteriorChain& c = out.chain;
    c.theta_draws = io::read_matrix_csv(dir / "theta.csv");
    c.initial_draws = io::read_matrix_csv(dir / "initial.csv");
    c.p_draws = io::read_matrix_csv(dir / "p.csv").col(0);
    c.noise_predictive_draws = io::read_matrix_csv(dir / "noise_predictive.csv").col(0);
    c.nstar_trace = io::read_matrix_csv(dir / "nstar.csv").col(0);
    if (out.config.replicate) {
        c.tau_draws = io::read_matrix_csv(dir / "tau.csv").col(0);
        c.y_draws = io::read_matrix_csv(dir / "y_draws.csv");
        Eigen::MatrixXd acc = io::read_matrix_csv(dir / "acceptance.csv");
        c.site_acceptance.assign(acc.col(1).data(), acc.col(1).data() + acc.rows());
    }
    c.global_acceptance = m.value("global_acceptance", 0.0);
    c.initial_acceptance = m.value("initial_acceptance", 0.0);
    c.final_nu = m.value("final_nu", 0.0);
    Eigen::VectorXd theta_mean = c.theta_mean();
    out.model = PolynomialMap(lag, std::move(basis),
                              std::vector<double>(theta_mean.data(), theta_mean.data() + theta_mean.size()));
    return out;
}

}  // namespace dnrr
