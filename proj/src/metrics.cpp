#include "dnrr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <json.hpp>

#include "dnrr/errors.hpp"

namespace dnrr::metrics {

double sample_sd(std::span<const double> v) {
    if (v.size() < 2) return 0.0;
    double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double avg_correction(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw ContractViolation("avg_correction: length mismatch");
    if (x.empty()) throw ContractViolation("avg_correction: empty series");
    double ss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) ss += (x[i] - y[i]) * (x[i] - y[i]);
    return std::sqrt(ss / static_cast<double>(x.size()));
}

double avg_dynamical_error(const Trajectory& z, const PolynomialMap& map) {
    if (z.lag() != map.lag()) throw ContractViolation("avg_dynamical_error: missing initial block");
    if (z.values.empty()) throw ContractViolation("avg_dynamical_error: empty series");
    double ss = 0.0;
    for (double r : residuals(map, z.values, z.initial)) ss += r * r;
    return std::sqrt(ss / static_cast<double>(z.values.size()));
}

double relative_reduction(double edyn_y, double edyn_x) {
    if (!(edyn_x > 0.0)) throw ContractViolation("relative_reduction: edyn_x must be positive");
    return 1.0 - edyn_y / edyn_x;
}

double noise_level(double noise_sd, std::span<const double> series) {
    double sd = sample_sd(series);
    if (!(sd > 0.0)) throw ContractViolation("noise_level: series has no spread");
    return 100.0 * noise_sd / sd;
}

double tail_flatness(const MixtureNoise& noise) {
    double mad = 0.0;
    for (std::size_t j = 0; j < noise.components(); ++j)
        mad += noise.weights()[j] * std::sqrt(noise.variances()[j]);
    return std::sqrt(2.0 / std::numbers::pi) * mad / noise.sd();
}

PareResult pare(std::span<const double> theta_hat, std::span<const double> theta_true, double zero_eps) {
    if (theta_hat.size() != theta_true.size()) throw ContractViolation("pare: length mismatch");
    PareResult out;
    out.per_coefficient.resize(theta_hat.size());
    out.absolute.resize(theta_hat.size());
    double ss = 0.0;
    for (std::size_t k = 0; k < theta_hat.size(); ++k) {
        double err = std::abs(theta_hat[k] - theta_true[k]);
        ss += err * err;
        out.absolute[k] = std::abs(theta_true[k]) <= zero_eps;
        out.per_coefficient[k] = out.absolute[k] ? 100.0 * err : 100.0 * err / std::abs(theta_true[k]);
    }
    out.mean = theta_hat.empty() ? 0.0
                                 : std::accumulate(out.per_coefficient.begin(), out.per_coefficient.end(), 0.0) /
                                       static_cast<double>(theta_hat.size());
    out.l2 = std::sqrt(ss);
    return out;
}

std::vector<double> indeterminism_trace(const Trajectory& z, const PolynomialMap& map) {
    if (z.lag() != map.lag()) throw ContractViolation("indeterminism_trace: missing initial block");
    std::vector<double> trace = residuals(map, z.values, z.initial);
    for (double& r : trace) r = r == 0.0 ? kLog10Floor : std::max(kLog10Floor, std::log10(std::abs(r)));
    return trace;
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
        double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

double spearman(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ContractViolation("spearman: length mismatch");
    if (a.size() < 2) throw ContractViolation("spearman: need at least two pairs");
    auto ra = average_ranks(a);
    auto rb = average_ranks(b);
    double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / static_cast<double>(ra.size());
    double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / static_cast<double>(rb.size());
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        sab += (ra[i] - ma) * (rb[i] - mb);
        saa += (ra[i] - ma) * (ra[i] - ma);
        sbb += (rb[i] - mb) * (rb[i] - mb);
    }
    if (saa == 0.0 || sbb == 0.0) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

std::string to_json(const NoiseReductionReport& r) {
    nlohmann::ordered_json j;
    j["e0"] = r.e0;
    j["edyn_x"] = r.edyn_x;
    j["edyn_y"] = r.edyn_y;
    j["rdyn"] = r.rdyn;
    j["eta"] = r.eta;
    j["pare_x"] = r.pare_x;
    j["pare_y"] = r.pare_y;
    j["pare_mean_x"] = r.pare_mean_x;
    j["pare_mean_y"] = r.pare_mean_y;
    j["l2_x"] = r.l2_x;
    j["l2_y"] = r.l2_y;
    j["indeterminism_trace_x"] = r.indeterminism_trace_x;
    j["indeterminism_trace_y"] = r.indeterminism_trace_y;
    return j.dump(2);
}

NoiseReductionReport report_from_json(const std::string& text) {
    auto j = nlohmann::json::parse(text);
    NoiseReductionReport r;
    r.e0 = j.at("e0").get<double>();
    r.edyn_x = j.at("edyn_x").get<double>();
    r.edyn_y = j.at("edyn_y").get<double>();
    r.rdyn = j.at("rdyn").get<double>();
    r.eta = j.at("eta").get<double>();
    r.pare_x = j.at("pare_x").get<std::vector<double>>();
    r.pare_y = j.at("pare_y").get<std::vector<double>>();
    r.pare_mean_x = j.at("pare_mean_x").get<double>();
    r.pare_mean_y = j.at("pare_mean_y").get<double>();
    r.l2_x = j.at("l2_x").get<double>();
    r.l2_y = j.at("l2_y").get<double>();
    r.indeterminism_trace_x = j.at("indeterminism_trace_x").get<std::vector<double>>();
    r.indeterminism_trace_y = j.at("indeterminism_trace_y").get<std::vector<double>>();
    return r;
}

}  // namespace dnrr::metrics
