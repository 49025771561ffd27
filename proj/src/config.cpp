#include <cmath>

#include <json.hpp>

#include "dnrr/cli.hpp"
#include "dnrr/errors.hpp"

namespace dnrr::cli {

using nlohmann::json;
using nlohmann::ordered_json;

PolynomialMap MapSpec::build() const { return PolynomialMap::full(lag, degree, coefficients); }

MixtureNoise NoiseSpec::build() const {
    if (kind == "gaussian") return gaussian_noise(sigma2);
    if (kind == "two_scale") return two_scale_noise(l, sigma2);
    if (kind == "mixture") return MixtureNoise(weights, variances);
    throw ConfigError("unknown noise kind '" + kind + "'");
}

void ExperimentConfig::validate() const {
    try {
        if (model_lag < 1 || model_degree < 0) throw ConfigError("model lag must be >= 1 and degree >= 0");
        if (truth) {
            const auto g = truth->build();
            if (static_cast<std::size_t>(g.lag()) != initial.size())
                throw ConfigError("initial block must hold one value per lag");
        }
        if (noise) noise->build();
        if (eta_target && !(eta_target->percent > 0.0 && eta_target->tolerance > 0.0))
            throw ConfigError("eta target and tolerance must be positive");
        if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
        for (double r : rho_grid)
            if (!(r > 0.0)) throw ConfigError("rho grid entries must be positive");
        chain.validate();
    } catch (const ContractViolation& e) {
        throw ConfigError(e.what());
    }
}

namespace {

constexpr double kHenonTheta[] = {1.38, 0.0, 0.27, 0.0, -1.0, 0.0};

void apply_scale(ExperimentConfig& c, Scale scale) {
    c.scale = scale;
    c.chain = scale == Scale::desk ? ChainConfig::desk() : ChainConfig::paper();
    c.chain.seed = c.seed;
}

ExperimentConfig henon(const std::string& name, int l, double sigma2, Scale scale) {
    ExperimentConfig c;
    c.preset = name;
    c.truth = MapSpec{2, 2, {std::begin(kHenonTheta), std::end(kHenonTheta)}};
    c.noise = NoiseSpec{"two_scale", l, sigma2, {}, {}};
    c.model_lag = 2;
    c.model_degree = 2;
    c.n = scale == Scale::desk ? 500 : 1000;
    c.initial = {0.5, 0.5};
    c.eta_target = EtaTarget{3.0, 0.3};
    apply_scale(c, scale);
    return c;
}

struct CubicRow {
    const char* name;
    double sigma2;
    double eta;
};

constexpr CubicRow kCubic[] = {{"cubic-3.5pct", 0.33e-4, 3.5},
                               {"cubic-4.5pct", 0.55e-4, 4.5},
                               {"cubic-5.5pct", 0.59e-4, 5.5},
                               {"cubic-6.5pct", 0.67e-4, 6.5},
                               {"cubic-7.5pct", 1.00e-4, 7.5}};

constexpr double kHenonSigma2[] = {0.21e-4, 0.29e-4, 0.40e-4, 0.77e-4};

ExperimentConfig cubic(const CubicRow& row, Scale scale) {
    ExperimentConfig c;
    c.preset = row.name;
    c.truth = MapSpec{1, 3, {0.05, 2.55, 0.0, -0.99}};
    c.noise = NoiseSpec{"two_scale", 1, row.sigma2, {}, {}};
    c.model_lag = 1;
    c.model_degree = 5;
    c.n = 200;
    c.initial = {0.0};
    c.eta_target = EtaTarget{row.eta, 0.3};
    apply_scale(c, scale);
    return c;
}

std::vector<double> rho_grid_default() {
    std::vector<double> g;
    for (int k = 0; k < 10; ++k) g.push_back(1e4 * std::pow(200.0, k / 9.0));
    return g;
}

template <class T>
void take(const json& j, const char* key, T& field) {
    if (j.contains(key)) field = j.at(key).get<T>();
}

}  // namespace

std::vector<std::string> preset_names() {
    std::vector<std::string> names{"henon-3pct", "henon-rho-sweep", "henon-f2l"};
    for (int l = 1; l <= 4; ++l) names.push_back("henon-f2l-" + std::to_string(l));
    for (const auto& r : kCubic) names.push_back(r.name);
    return names;
}

ExperimentConfig preset(const std::string& name, Scale scale) {
    if (name == "henon-3pct") return henon(name, 1, 0.21e-4, scale);
    if (name == "henon-rho-sweep") {
        auto c = henon(name, 1, 0.21e-4, scale);
        c.rho_grid = rho_grid_default();
        return c;
    }
    if (name == "henon-f2l") {
        auto c = henon(name, 1, 0.21e-4, scale);
        for (int l = 1; l <= 4; ++l) c.batch.push_back("henon-f2l-" + std::to_string(l));
        return c;
    }
    for (int l = 1; l <= 4; ++l)
        if (name == "henon-f2l-" + std::to_string(l)) return henon(name, l, kHenonSigma2[l - 1], scale);
    for (const auto& r : kCubic)
        if (name == r.name) return cubic(r, scale);
    throw ConfigError("unknown preset '" + name + "'");
}

ExperimentConfig config_from_json(const std::string& text, const std::optional<ExperimentConfig>& base) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    try {
        Scale scale = base ? base->scale : Scale::paper;
        if (j.contains("scale")) {
            const auto s = j.at("scale").get<std::string>();
            if (s == "desk") scale = Scale::desk;
            else if (s == "paper") scale = Scale::paper;
            else throw ConfigError("scale must be 'desk' or 'paper'");
        }
        ExperimentConfig c;
        if (j.contains("preset")) c = preset(j.at("preset").get<std::string>(), scale);
        else if (base) c = *base;
        if (j.contains("scale") && c.scale != scale) {
            if (!c.preset.empty()) c = preset(c.preset, scale);
            else apply_scale(c, scale);
        }

        take(j, "seed", c.seed);
        c.chain.seed = c.seed;
        if (j.contains("map")) {
            const auto& m = j.at("map");
            MapSpec s;
            take(m, "lag", s.lag);
            take(m, "degree", s.degree);
            take(m, "coefficients", s.coefficients);
            c.truth = s;
        }
        if (j.contains("noise")) {
            const auto& m = j.at("noise");
            NoiseSpec s;
            take(m, "kind", s.kind);
            take(m, "l", s.l);
            take(m, "sigma2", s.sigma2);
            take(m, "weights", s.weights);
            take(m, "variances", s.variances);
            c.noise = s;
        }
        if (j.contains("model")) {
            take(j.at("model"), "lag", c.model_lag);
            take(j.at("model"), "degree", c.model_degree);
        }
        take(j, "n", c.n);
        take(j, "initial", c.initial);
        if (j.contains("eta_target")) {
            const auto& e = j.at("eta_target");
            if (e.is_null()) c.eta_target.reset();
            else c.eta_target = EtaTarget{e.at("percent").get<double>(), e.value("tolerance", 0.3)};
        }
        if (j.contains("chain")) {
            json merged = json::parse(dnrr::config_to_json(c.chain));
            merged.merge_patch(j.at("chain"));
            merged["seed"] = c.seed;
            c.chain = dnrr::config_from_json(merged.dump());
        }
        take(j, "rho_grid", c.rho_grid);
        take(j, "alpha", c.alpha);
        if (j.contains("input")) c.input = j.at("input").get<std::string>();
        if (j.contains("out")) c.out = j.at("out").get<std::string>();
        take(j, "jobs", c.jobs);
        take(j, "recon_y", c.recon_y);
        take(j, "keep_sweep_chains", c.keep_sweep_chains);
        take(j, "batch", c.batch);
        return c;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config field has the wrong type: ") + e.what());
    }
}

std::string experiment_to_json(const ExperimentConfig& c) {
    ordered_json j;
    j["preset"] = c.preset;
    j["scale"] = c.scale == Scale::desk ? "desk" : "paper";
    if (c.truth) j["map"] = {{"lag", c.truth->lag}, {"degree", c.truth->degree}, {"coefficients", c.truth->coefficients}};
    if (c.noise) {
        ordered_json nz;
        nz["kind"] = c.noise->kind;
        nz["l"] = c.noise->l;
        nz["sigma2"] = c.noise->sigma2;
        if (c.noise->kind == "mixture") {
            nz["weights"] = c.noise->weights;
            nz["variances"] = c.noise->variances;
        }
        j["noise"] = nz;
    }
    j["model"] = {{"lag", c.model_lag}, {"degree", c.model_degree}};
    j["n"] = c.n;
    j["initial"] = c.initial;
    if (c.eta_target) j["eta_target"] = {{"percent", c.eta_target->percent}, {"tolerance", c.eta_target->tolerance}};
    j["seed"] = c.seed;
    j["chain"] = ordered_json::parse(dnrr::config_to_json(c.chain));
    if (!c.rho_grid.empty()) j["rho_grid"] = c.rho_grid;
    j["alpha"] = c.alpha;
    j["recon_y"] = c.recon_y;
    if (!c.batch.empty()) j["batch"] = c.batch;
    return j.dump(2);
}

}  // namespace dnrr::cli
