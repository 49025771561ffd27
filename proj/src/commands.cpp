#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "dnrr/cli.hpp"
#include "dnrr/errors.hpp"
#include "dnrr/io.hpp"

namespace dnrr::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const double kNaN = std::numeric_limits<double>::quiet_NaN();

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir.string());
}

// Series to denoise: explicit input, a trajectory left by `simulate` in the
// output directory, or a fresh simulation.
Trajectory acquire_series(const ExperimentConfig& config, std::ostream& log) {
    if (!config.input.empty()) return io::read_trajectory(config.input);
    if (fs::exists(config.out / "trajectory.csv")) return io::read_trajectory(config.out / "trajectory.csv");
    return cmd_simulate(config, log).trajectory;
}

// Truth coefficients written in the model basis; empty when the generating
// map has a monomial the model lacks.
std::vector<double> truth_in_basis(const PolynomialMap& truth, const PolynomialMap& model) {
    if (truth.lag() != model.lag()) return {};
    std::vector<double> out(model.size(), 0.0);
    const auto coeffs = truth.coefficients();
    for (std::size_t k = 0; k < truth.size(); ++k) {
        const auto it = std::find(model.basis().begin(), model.basis().end(), truth.basis()[k]);
        if (it == model.basis().end()) {
            if (coeffs[k] != 0.0) return {};
            continue;
        }
        out[static_cast<std::size_t>(it - model.basis().begin())] = coeffs[k];
    }
    return out;
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

std::optional<ExperimentConfig> read_experiment(const fs::path& dir) {
    if (!fs::exists(dir / "experiment.json")) return std::nullopt;
    return config_from_json(io::read_text(dir / "experiment.json"));
}

RunAnalysis analyze(const LoadedChain& lc, estimation::EstimateSelection selection,
                    const std::optional<LoadedChain>& recon, const std::optional<ExperimentConfig>& exp) {
    RunAnalysis a;
    a.x = lc.data;
    a.x.initial = to_std(lc.chain.initial_mean());
    a.g_x = lc.model;
    a.selection = std::move(selection);
    a.y = Trajectory{a.selection.y_point, a.x.initial, {}};
    if (recon) a.g_y = recon->model;

    auto& r = a.report;
    r.e0 = metrics::avg_correction(a.x.values, a.y.values);
    r.edyn_x = metrics::avg_dynamical_error(a.x, a.g_x);
    r.edyn_y = metrics::avg_dynamical_error(a.y, a.g_x);
    r.rdyn = r.edyn_x > 0.0 ? metrics::relative_reduction(r.edyn_y, r.edyn_x) : kNaN;
    if (exp && exp->noise) {
        r.eta = metrics::noise_level(exp->noise->build().sd(), a.x.values);
    } else {
        r.eta = metrics::noise_level(r.edyn_x, a.x.values);
    }
    r.pare_mean_x = r.pare_mean_y = r.l2_x = r.l2_y = kNaN;
    if (exp && exp->truth) {
        const auto truth = truth_in_basis(exp->truth->build(), a.g_x);
        if (!truth.empty()) {
            const auto px = metrics::pare(a.g_x.coefficients(), truth);
            r.pare_x = px.per_coefficient;
            r.pare_mean_x = px.mean;
            r.l2_x = px.l2;
            if (a.g_y) {
                const auto py = metrics::pare(a.g_y->coefficients(), truth);
                r.pare_y = py.per_coefficient;
                r.pare_mean_y = py.mean;
                r.l2_y = py.l2;
            }
        }
    }
    r.indeterminism_trace_x = metrics::indeterminism_trace(a.x, a.g_x);
    r.indeterminism_trace_y = metrics::indeterminism_trace(a.y, a.g_x);
    const auto& tau = lc.chain.tau_draws;
    if (tau.size() >= 20) {
        std::vector<double> delta(static_cast<std::size_t>(tau.size()));
        for (Eigen::Index i = 0; i < tau.size(); ++i) delta[static_cast<std::size_t>(i)] = 1.0 / tau(i);
        a.delta_hpd = estimation::hpd_interval(delta, 0.95);
    }
    return a;
}

std::string fmt(double v, int digits = 5) {
    if (std::isnan(v)) return "n/a";
    std::ostringstream s;
    s.precision(digits);
    s << v;
    return s.str();
}

Eigen::MatrixXd columns(std::initializer_list<const std::vector<double>*> cols) {
    const std::size_t rows = (*cols.begin())->size();
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols.size()));
    Eigen::Index c = 0;
    for (const auto* col : cols) {
        for (std::size_t i = 0; i < rows; ++i) m(static_cast<Eigen::Index>(i), c) = (*col)[i];
        ++c;
    }
    return m;
}

void write_site_set(const fs::path& path, const std::vector<std::size_t>& sites, const Trajectory& y) {
    std::vector<double> site, yi, ylag;
    for (std::size_t s : sites) {
        site.push_back(static_cast<double>(s));
        yi.push_back(y.values[s - 1]);
        ylag.push_back(value_at(y.values, y.initial, static_cast<long>(s) - 1));
    }
    io::write_matrix_csv(path, {"site", "y", "y_lag1"}, columns({&site, &yi, &ylag}));
}

std::vector<double> noise_grid(const PosteriorChain& chain) {
    // Empty mixture components keep prior precisions, so a few draws are
    // astronomically large; the grid follows the interquartile spread.
    std::vector<double> z(chain.noise_predictive_draws.data(),
                          chain.noise_predictive_draws.data() + chain.noise_predictive_draws.size());
    std::sort(z.begin(), z.end());
    const double iqr = z[z.size() * 3 / 4] - z[z.size() / 4];
    const double half = 8.0 * (iqr > 0.0 ? iqr / 1.349 : 1.0);
    std::vector<double> grid(401);
    for (std::size_t k = 0; k < grid.size(); ++k) grid[k] = -half + 2.0 * half * static_cast<double>(k) / 400.0;
    return grid;
}

void write_bundle(const fs::path& dir, const RunAnalysis& a, const LoadedChain& lc,
                  const std::optional<LoadedChain>& recon, const std::optional<ExperimentConfig>& exp) {
    io::write_text(dir / "report.json", metrics::to_json(a.report) + "\n");
    Trajectory y = a.y;
    y.meta["estimate"] = "dip-selected mean/MAP per site";
    io::write_trajectory(dir / "y.csv", y);

    const std::size_t n = a.x.values.size();
    std::vector<double> site(n), xs(n), mean(n), mapv(n), dip(n), pv(n), mm(n), om(n), chosen(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& s = a.selection.summaries[i];
        site[i] = static_cast<double>(s.site);
        xs[i] = a.x.values[i];
        mean[i] = s.mean;
        mapv[i] = s.map_estimate;
        dip[i] = s.dip_statistic;
        pv[i] = s.dip_pvalue;
        mm[i] = s.multimodal ? 1.0 : 0.0;
        om[i] = s.omega;
        chosen[i] = s.chosen;
    }
    io::write_matrix_csv(dir / "summaries.csv",
                         {"site", "x", "mean", "map", "dip", "dip_pvalue", "multimodal", "omega", "chosen"},
                         columns({&site, &xs, &mean, &mapv, &dip, &pv, &mm, &om, &chosen}));
    write_site_set(dir / "m_ht.csv", a.selection.m_ht, a.y);
    write_site_set(dir / "omega_ht.csv", a.selection.omega_ht, a.y);

    std::vector<double> xl(n), yv(n), yl(n);
    for (std::size_t i = 0; i < n; ++i) {
        xl[i] = value_at(a.x.values, a.x.initial, static_cast<long>(i));
        yv[i] = a.y.values[i];
        yl[i] = value_at(a.y.values, a.y.initial, static_cast<long>(i));
    }
    io::write_matrix_csv(dir / "delay_plot.csv", {"site", "x", "x_lag1", "y", "y_lag1"},
                         columns({&site, &xs, &xl, &yv, &yl}));
    io::write_matrix_csv(dir / "indeterminism.csv", {"site", "log10_x", "log10_y"},
                         columns({&site, &a.report.indeterminism_trace_x, &a.report.indeterminism_trace_y}));

    const auto grid = noise_grid(lc.chain);
    std::vector<double> f_true(grid.size(), kNaN), f_x = estimation::noise_density_estimate(lc.chain, grid);
    std::vector<double> f_y(grid.size(), kNaN);
    if (exp && exp->noise) {
        const auto noise = exp->noise->build();
        for (std::size_t k = 0; k < grid.size(); ++k) f_true[k] = noise.density(grid[k]);
    }
    if (recon) f_y = estimation::noise_density_estimate(recon->chain, grid);
    io::write_matrix_csv(dir / "kde.csv", {"z", "f_true", "fhat_x", "fhat_y"},
                         columns({&grid, &f_true, &f_x, &f_y}));

    const auto& r = a.report;
    std::ostringstream md;
    md << "# Noise reduction summary\n\n";
    if (exp && !exp->preset.empty()) md << "Preset: `" << exp->preset << "`\n\n";
    md << "n = " << n << ", rho = " << lc.config.rho << ", stored draws = " << lc.chain.draws()
       << ", seed = " << lc.config.seed << "\n\n";
    md << "| rho | E_dyn(x, g_x) | E_dyn(y, g_x) | R_dyn | E0 | eta % |\n";
    md << "|---|---|---|---|---|---|\n";
    md << "| " << lc.config.rho << " | " << fmt(r.edyn_x) << " | " << fmt(r.edyn_y) << " | " << fmt(r.rdyn, 4)
       << " | " << fmt(r.e0) << " | " << fmt(r.eta, 3) << " |\n\n";
    if (!r.pare_x.empty()) {
        md << "| series |";
        for (std::size_t k = 0; k < r.pare_x.size(); ++k) md << " theta_" << k << " |";
        md << " mean PARE | l2 |\n|---|";
        for (std::size_t k = 0; k < r.pare_x.size() + 2; ++k) md << "---|";
        md << "\n| x |";
        for (double v : r.pare_x) md << " " << fmt(v, 3) << " |";
        md << " " << fmt(r.pare_mean_x, 3) << " | " << fmt(r.l2_x, 3) << " |\n";
        if (!r.pare_y.empty()) {
            md << "| y |";
            for (double v : r.pare_y) md << " " << fmt(v, 3) << " |";
            md << " " << fmt(r.pare_mean_y, 3) << " | " << fmt(r.l2_y, 3) << " |\n";
        }
        md << "\n";
    }
    md << "95% HPD of delta = 1/tau: [" << fmt(a.delta_hpd.first, 4) << ", " << fmt(a.delta_hpd.second, 4) << "]\n\n";
    md << "Multimodal sites (dip p < " << exp.value_or(ExperimentConfig{}).alpha << "): " << a.selection.m_ht.size()
       << "; forecastable sites: " << a.selection.omega_ht.size() << "\n\n";
    md << "Replica acceptance " << fmt(lc.chain.global_acceptance, 3) << ", final nu " << fmt(lc.chain.final_nu, 4)
       << ", initial-condition acceptance " << fmt(lc.chain.initial_acceptance, 3) << "\n";
    io::write_text(dir / "report.md", md.str());
}

struct TableRow {
    std::string name;
    std::string noise;
    double sigma2;
    metrics::NoiseReductionReport report;
};

void write_table(const fs::path& dir, const std::vector<TableRow>& rows) {
    std::ostringstream csv, md;
    csv << "run,noise,sigma2,eta,e0,edyn,rdyn,pare_mean_x,pare_mean_y\r\n";
    md << "# Noise reduction across runs\n\n";
    md << "| run | noise | sigma2 x 1e4 | eta % | E0 | E_dyn | R_dyn | mean PARE x | mean PARE y |\n";
    md << "|---|---|---|---|---|---|---|---|---|\n";
    for (const auto& t : rows) {
        const auto& r = t.report;
        csv << io::csv_field(t.name) << "," << io::csv_field(t.noise) << "," << io::format_double(t.sigma2) << ","
            << io::format_double(r.eta) << "," << io::format_double(r.e0) << "," << io::format_double(r.edyn_y) << ","
            << io::format_double(r.rdyn) << "," << io::format_double(r.pare_mean_x) << ","
            << io::format_double(r.pare_mean_y) << "\r\n";
        md << "| " << t.name << " | " << t.noise << " | " << fmt(t.sigma2 * 1e4, 3) << " | " << fmt(r.eta, 3) << " | "
           << fmt(r.e0, 4) << " | " << fmt(r.edyn_y, 4) << " | " << fmt(r.rdyn, 4) << " | " << fmt(r.pare_mean_x, 3)
           << " | " << fmt(r.pare_mean_y, 3) << " |\n";
    }
    io::write_text(dir / "table.csv", csv.str());
    io::write_text(dir / "report.md", md.str());
}

void denoise_one(const ExperimentConfig& config, std::ostream& log) {
    config.validate();
    ensure_dir(config.out);
    const Trajectory x = acquire_series(config, log);
    const PolynomialMap model = config.model();
    if (x.lag() != model.lag())
        throw ConfigError("trajectory carries " + std::to_string(x.lag()) + " initial values but the model lag is " +
                          std::to_string(model.lag()));
    io::write_text(config.out / "experiment.json", experiment_to_json(config) + "\n");

    const PosteriorChain chain = run_chain(x, model, config.chain);
    save_chain(config.out / "chain", chain, config.chain, model, x);
    LoadedChain lc{chain, config.chain, model, x};
    lc.model.set_coefficients(to_std(chain.theta_mean()));
    auto selection = estimation::select_estimates(chain, {config.alpha});

    std::optional<LoadedChain> recon;
    if (config.recon_y) {
        const Trajectory y{selection.y_point, to_std(chain.initial_mean()), {}};
        ChainConfig rc = config.chain;
        rc.replicate = false;
        const PosteriorChain ry = run_chain(y, model, rc);
        save_chain(config.out / "recon_y", ry, rc, model, y);
        recon = LoadedChain{ry, rc, model, y};
        recon->model.set_coefficients(to_std(ry.theta_mean()));
    }
    const RunAnalysis a = analyze(lc, std::move(selection), recon, config);
    write_bundle(config.out, a, lc, recon, config);
    log << config.out.string() << ": E0=" << fmt(a.report.e0) << " E_dyn(x)=" << fmt(a.report.edyn_x)
        << " E_dyn(y)=" << fmt(a.report.edyn_y) << " R_dyn=" << fmt(a.report.rdyn, 4) << "\n";
}

}  // namespace

SimulationResult cmd_simulate(const ExperimentConfig& config, std::ostream& log) {
    config.validate();
    if (!config.truth || !config.noise) throw ConfigError("simulate needs a map and a noise specification");
    const auto g = config.truth->build();
    const auto noise = config.noise->build();
    Rng rng(derive_seed(config.seed, 2));
    SimulationOptions options;
    options.target_eta = config.eta_target;
    SimulationResult r = simulate(g, noise, config.n, config.initial, rng, options);
    if (!config.preset.empty()) r.trajectory.meta["preset"] = config.preset;
    r.trajectory.meta["seed"] = std::to_string(config.seed);
    ensure_dir(config.out);
    io::write_trajectory(config.out / "trajectory.csv", r.trajectory);
    log << "eta=" << fmt(r.eta, 4) << " rejections=" << r.rejections << " -> "
        << (config.out / "trajectory.csv").string() << "\n";
    return r;
}

RunAnalysis analyze_run(const fs::path& dir, double alpha) {
    if (!fs::exists(dir / "chain" / "manifest.json")) throw IoError("no chain found in " + dir.string());
    const LoadedChain lc = load_chain(dir / "chain");
    std::optional<LoadedChain> recon;
    if (fs::exists(dir / "recon_y" / "manifest.json")) recon = load_chain(dir / "recon_y");
    const auto exp = read_experiment(dir);
    if (exp) alpha = exp->alpha;
    return analyze(lc, estimation::select_estimates(lc.chain, {alpha}), recon, exp);
}

void cmd_denoise(const ExperimentConfig& config, std::ostream& log) {
    if (config.batch.empty()) {
        denoise_one(config, log);
        return;
    }
    std::vector<ExperimentConfig> runs;
    for (const auto& name : config.batch) {
        ExperimentConfig c = preset(name, config.scale);
        c.seed = config.seed;
        const std::size_t iters = config.chain.iterations, burn = config.chain.burn_in, thin = config.chain.thin;
        c.chain.iterations = iters;
        c.chain.burn_in = burn;
        c.chain.thin = thin;
        c.chain.seed = config.seed;
        c.alpha = config.alpha;
        c.recon_y = config.recon_y;
        c.out = config.out / name;
        runs.push_back(std::move(c));
    }
    ensure_dir(config.out);
    const unsigned jobs = std::max(1u, config.jobs);
    std::vector<std::string> logs(runs.size());
    std::vector<std::string> errors(runs.size());
    for (std::size_t start = 0; start < runs.size(); start += jobs) {
        std::vector<std::future<void>> batch;
        for (std::size_t k = start; k < std::min(runs.size(), start + jobs); ++k) {
            batch.push_back(std::async(jobs == 1 ? std::launch::deferred : std::launch::async, [&, k] {
                std::ostringstream s;
                try {
                    denoise_one(runs[k], s);
                } catch (const std::exception& e) {
                    errors[k] = e.what();
                }
                logs[k] = s.str();
            }));
        }
        for (auto& f : batch) f.get();
    }
    std::string first_error;
    for (std::size_t k = 0; k < runs.size(); ++k) {
        log << logs[k];
        if (!errors[k].empty()) {
            log << runs[k].out.string() << ": failed: " << errors[k] << "\n";
            if (first_error.empty()) first_error = runs[k].preset + ": " + errors[k];
        }
    }
    cmd_report(config.out, log);
    if (!first_error.empty()) throw NumericError("batch member failed: " + first_error);
}

SweepResult cmd_rho_sweep(const ExperimentConfig& config, std::ostream& log) {
    config.validate();
    if (config.rho_grid.empty()) throw ConfigError("rho grid is empty");
    std::vector<double> grid;
    for (double r : config.rho_grid) {
        if (std::find(grid.begin(), grid.end(), r) != grid.end()) {
            log << "warning: duplicate rho " << r << " ignored\n";
            continue;
        }
        grid.push_back(r);
    }
    ensure_dir(config.out);
    const Trajectory x = acquire_series(config, log);
    const PolynomialMap model = config.model();
    if (x.lag() != model.lag()) throw ConfigError("trajectory lag does not match the model lag");

    std::vector<ChainConfig> configs;
    for (double r : grid) {
        ChainConfig c = config.chain;
        c.rho = r;
        configs.push_back(c);
    }
    const auto outcomes = run_replicated(x, model, configs, config.jobs);

    SweepResult result;
    std::vector<double> rho_ok, e0_ok, edyn_ok;
    for (std::size_t k = 0; k < outcomes.size(); ++k) {
        const auto& o = outcomes[k];
        SweepRow row{o.rho, false, o.error, kNaN, kNaN, kNaN, kNaN};
        if (o.chain) {
            try {
                if (config.keep_sweep_chains)
                    save_chain(config.out / ("rho_" + std::to_string(k + 1)) / "chain", *o.chain, configs[k], model, x);
                LoadedChain lc{*o.chain, configs[k], model, x};
                lc.model.set_coefficients(to_std(o.chain->theta_mean()));
                const auto a = analyze(lc, estimation::select_estimates(*o.chain, {config.alpha}), std::nullopt,
                                       std::nullopt);
                row.ok = true;
                row.e0 = a.report.e0;
                row.edyn_x = a.report.edyn_x;
                row.edyn_y = a.report.edyn_y;
                row.rdyn = a.report.rdyn;
                rho_ok.push_back(row.rho);
                e0_ok.push_back(row.e0);
                edyn_ok.push_back(row.edyn_y);
            } catch (const std::exception& e) {
                row.error = e.what();
            }
        }
        if (!row.ok) log << "rho " << row.rho << " failed: " << row.error << "\n";
        result.rows.push_back(row);
    }
    result.spearman_e0 = rho_ok.size() >= 2 ? metrics::spearman(rho_ok, e0_ok) : kNaN;
    result.spearman_edyn = rho_ok.size() >= 2 ? metrics::spearman(rho_ok, edyn_ok) : kNaN;

    std::ostringstream csv;
    csv << "rho,status,e0,edyn_x,edyn_y,rdyn,error\r\n";
    for (const auto& r : result.rows)
        csv << io::format_double(r.rho) << "," << (r.ok ? "ok" : "failed") << "," << io::format_double(r.e0) << ","
            << io::format_double(r.edyn_x) << "," << io::format_double(r.edyn_y) << "," << io::format_double(r.rdyn)
            << "," << io::csv_field(r.error) << "\r\n";
    io::write_text(config.out / "rho_sweep.csv", csv.str());
    std::ostringstream trend;
    trend << "statistic,value\r\n"
          << "spearman_rho_e0," << io::format_double(result.spearman_e0) << "\r\n"
          << "spearman_rho_edyn," << io::format_double(result.spearman_edyn) << "\r\n";
    io::write_text(config.out / "rho_sweep_trend.csv", trend.str());
    log << "rho sweep over " << grid.size() << " values: spearman(rho, E0)=" << fmt(result.spearman_e0, 3)
        << " spearman(rho, E_dyn)=" << fmt(result.spearman_edyn, 3) << "\n";
    return result;
}

void cmd_report(const fs::path& dir, std::ostream& log) {
    if (fs::exists(dir / "chain" / "manifest.json")) {
        const LoadedChain lc = load_chain(dir / "chain");
        std::optional<LoadedChain> recon;
        if (fs::exists(dir / "recon_y" / "manifest.json")) recon = load_chain(dir / "recon_y");
        const auto exp = read_experiment(dir);
        const double alpha = exp ? exp->alpha : 0.05;
        const RunAnalysis a = analyze(lc, estimation::select_estimates(lc.chain, {alpha}), recon, exp);
        write_bundle(dir, a, lc, recon, exp);
        log << "report written to " << (dir / "report.md").string() << "\n";
        return;
    }
    std::vector<TableRow> rows;
    if (fs::is_directory(dir)) {
        std::vector<fs::path> subdirs;
        for (const auto& e : fs::directory_iterator(dir))
            if (e.is_directory() && fs::exists(e.path() / "chain" / "manifest.json")) subdirs.push_back(e.path());
        std::sort(subdirs.begin(), subdirs.end());
        for (const auto& sub : subdirs) {
            const auto a = analyze_run(sub);
            const auto exp = read_experiment(sub);
            TableRow t{sub.filename().string(), "", kNaN, a.report};
            if (exp && exp->noise) {
                t.noise = exp->noise->kind == "two_scale" ? "f2," + std::to_string(exp->noise->l) : exp->noise->kind;
                t.sigma2 = exp->noise->sigma2;
            }
            rows.push_back(std::move(t));
        }
    }
    if (rows.empty()) throw IoError("no chain found in " + dir.string());
    write_table(dir, rows);
    log << "table over " << rows.size() << " runs written to " << (dir / "report.md").string() << "\n";
}

}  // namespace dnrr::cli
