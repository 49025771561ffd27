#include "dnrr/random.hpp"

#include <cmath>
#include <limits>

namespace dnrr {

double draw_gamma(Rng& rng, double shape, double rate) {
    std::gamma_distribution<double> gamma(shape, 1.0 / rate);
    double v = gamma(rng);
    if (!(v >= std::numeric_limits<double>::min())) v = std::numeric_limits<double>::min();
    return v;
}

double draw_beta(Rng& rng, double a, double b) {
    // Gamma ratio computed in log space: both draws can underflow when the
    // shapes are tiny.
    std::gamma_distribution<double> ga(a + 1.0, 1.0);
    std::gamma_distribution<double> gb(b + 1.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double la = std::log(ga(rng)) + std::log(unif(rng)) / a;
    double lb = std::log(gb(rng)) + std::log(unif(rng)) / b;
    double m = std::max(la, lb);
    double ea = std::exp(la - m);
    double eb = std::exp(lb - m);
    return ea / (ea + eb);
}

double draw_normal(Rng& rng, double mean, double sd) {
    std::normal_distribution<double> normal(mean, sd);
    return normal(rng);
}

double draw_uniform(Rng& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    return unif(rng);
}

std::int64_t draw_geometric(Rng& rng, double p) {
    if (p >= 1.0) return 0;
    std::geometric_distribution<std::int64_t> geom(p);
    return geom(rng);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace dnrr
