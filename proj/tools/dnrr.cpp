#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "dnrr/cli.hpp"
#include "dnrr/errors.hpp"
#include "dnrr/io.hpp"

using namespace dnrr;

namespace {

struct Flags {
    std::string config;
    std::string preset;
    std::string scale;
    std::string out;
    std::string input;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> jobs;
    std::optional<double> rho;
};

cli::ExperimentConfig resolve(const Flags& f) {
    cli::Scale scale = cli::Scale::paper;
    if (f.scale == "desk") scale = cli::Scale::desk;
    else if (!f.scale.empty() && f.scale != "paper") throw ConfigError("--scale must be 'desk' or 'paper'");

    std::optional<cli::ExperimentConfig> base;
    if (!f.preset.empty()) base = cli::preset(f.preset, scale);
    cli::ExperimentConfig c = base.value_or(cli::ExperimentConfig{});
    if (!base && scale == cli::Scale::desk) {
        c.scale = scale;
        c.chain = ChainConfig::desk();
    }
    if (!f.config.empty()) {
        std::string text;
        try {
            text = io::read_text(f.config);
        } catch (const IoError& e) {
            throw ConfigError(e.what());
        }
        c = cli::config_from_json(text, c);
    }
    if (f.seed) {
        c.seed = *f.seed;
        c.chain.seed = *f.seed;
    }
    if (f.jobs) c.jobs = *f.jobs;
    if (f.rho) c.chain.rho = *f.rho;
    if (!f.out.empty()) c.out = f.out;
    if (!f.input.empty()) c.input = f.input;
    return c;
}

void add_common(CLI::App* cmd, Flags& f) {
    cmd->add_option("--config", f.config, "JSON experiment file");
    cmd->add_option("--preset", f.preset, "named experiment preset");
    cmd->add_option("--scale", f.scale, "desk or paper (default paper)");
    cmd->add_option("--seed", f.seed, "random seed");
    cmd->add_option("--jobs", f.jobs, "chains run concurrently");
    cmd->add_option("--out", f.out, "output directory");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bayesian dynamical noise reduction for polynomial maps"};
    app.require_subcommand(1);
    Flags f;
    std::string report_dir;
    auto* sim = app.add_subcommand("simulate", "simulate a noisy trajectory");
    add_common(sim, f);
    auto* den = app.add_subcommand("denoise", "sample the posterior and denoise a trajectory");
    add_common(den, f);
    den->add_option("--input", f.input, "trajectory CSV (default: <out>/trajectory.csv or a fresh simulation)");
    den->add_option("--rho", f.rho, "proximity parameter");
    auto* sweep = app.add_subcommand("rho-sweep", "denoise one trajectory over a grid of rho values");
    add_common(sweep, f);
    sweep->add_option("--input", f.input, "trajectory CSV");
    auto* rep = app.add_subcommand("report", "summarize a run directory");
    add_common(rep, f);
    rep->add_option("dir", report_dir, "run directory (default: --out)");
    auto* presets = app.add_subcommand("presets", "list preset names");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : cli::kExitConfig;
    }

    try {
        if (presets->parsed()) {
            for (const auto& n : cli::preset_names()) std::cout << n << "\n";
            return cli::kExitOk;
        }
        if (rep->parsed()) {
            const std::string dir = !report_dir.empty() ? report_dir : (!f.out.empty() ? f.out : "dnrr-out");
            cli::cmd_report(dir, std::cout);
            return cli::kExitOk;
        }
        const auto config = resolve(f);
        if (sim->parsed()) cli::cmd_simulate(config, std::cout);
        else if (den->parsed()) cli::cmd_denoise(config, std::cout);
        else if (sweep->parsed()) cli::cmd_rho_sweep(config, std::cout);
        return cli::kExitOk;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return cli::kExitConfig;
    } catch (const ContractViolation& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return cli::kExitConfig;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return cli::kExitNumeric;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return cli::kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
