#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dnrr/dynamics.hpp"
#include "dnrr/estimation.hpp"
#include "dnrr/metrics.hpp"
#include "dnrr/orchestrator.hpp"

namespace dnrr::cli {

struct MapSpec {
    int lag = 2;
    int degree = 2;
    std::vector<double> coefficients;

    PolynomialMap build() const;
};

struct NoiseSpec {
    /// "gaussian", "two_scale" or "mixture".
    std::string kind = "two_scale";
    int l = 1;
    double sigma2 = 0.0;
    std::vector<double> weights;
    std::vector<double> variances;

    MixtureNoise build() const;
};

enum class Scale { paper, desk };

struct ExperimentConfig {
    std::string preset;
    Scale scale = Scale::paper;
    /// Generating map and noise of synthetic runs.
    std::optional<MapSpec> truth;
    std::optional<NoiseSpec> noise;
    /// Model space fitted by the sampler.
    int model_lag = 2;
    int model_degree = 2;
    std::size_t n = 1000;
    std::vector<double> initial{0.5, 0.5};
    std::optional<EtaTarget> eta_target;
    std::uint64_t seed = 1;
    ChainConfig chain;
    std::vector<double> rho_grid;
    double alpha = 0.05;
    std::filesystem::path input;
    std::filesystem::path out = "dnrr-out";
    unsigned jobs = 1;
    /// Estimate f and g again from the noise-reduced series (reconstruction only).
    bool recon_y = true;
    /// Persist every chain of a rho sweep.
    bool keep_sweep_chains = false;
    /// Preset names run one after another into out/<name>.
    std::vector<std::string> batch;

    PolynomialMap model() const { return PolynomialMap::full(model_lag, model_degree); }
    void validate() const;
};

std::vector<std::string> preset_names();

/// Throws ConfigError for an unknown name.
ExperimentConfig preset(const std::string& name, Scale scale = Scale::paper);

/// Overlay of a JSON document on `base` (or on the document's own "preset").
ExperimentConfig config_from_json(const std::string& text, const std::optional<ExperimentConfig>& base = {});
std::string experiment_to_json(const ExperimentConfig& config);

// Exit codes of the command-line front end.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumeric = 3;
inline constexpr int kExitIo = 4;

/// Writes out/trajectory.csv.
SimulationResult cmd_simulate(const ExperimentConfig& config, std::ostream& log);

struct RunAnalysis {
    Trajectory x;
    /// Noise-reduced point estimate with the posterior-mean initial block.
    Trajectory y;
    PolynomialMap g_x;
    std::optional<PolynomialMap> g_y;
    estimation::EstimateSelection selection;
    metrics::NoiseReductionReport report;
    std::pair<double, double> delta_hpd{0.0, 0.0};
};

/// Recomputes every reported number of a denoise run directory from its
/// persisted files.
RunAnalysis analyze_run(const std::filesystem::path& dir, double alpha = 0.05);

/// Full pipeline on one series; writes the chain, y^n, selections, report and
/// noise-density grid under config.out. Batch configs run every member.
void cmd_denoise(const ExperimentConfig& config, std::ostream& log);

struct SweepRow {
    double rho;
    bool ok;
    std::string error;
    double e0, edyn_x, edyn_y, rdyn;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    double spearman_e0;
    double spearman_edyn;
};

/// Writes out/rho_sweep.csv and out/rho_sweep_trend.csv.
SweepResult cmd_rho_sweep(const ExperimentConfig& config, std::ostream& log);

/// Summary of a run directory, or the comparison table over run
/// subdirectories. Throws IoError("no chain found ...") otherwise.
void cmd_report(const std::filesystem::path& dir, std::ostream& log);

}  // namespace dnrr::cli
