#include "dnrr/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <tuple>

#include <fftw3.h>

#include "dnrr/errors.hpp"
#include "dnrr/metrics.hpp"

namespace dnrr::estimation {

namespace {

// Value at x[k] of the hull segment joining knots a <= k <= b over the points
// (x_j, j). A vertical segment reads as its lower end for the minorant and
// its upper end for the majorant.
inline double hull_at(const std::vector<double>& x, int a, int b, int k, bool upper) {
    if (x[b] == x[a]) return upper ? b : a;
    return a + (x[k] - x[a]) * (b - a) / (x[b] - x[a]);
}

// Dip of an ascending sample, Hartigan & Hartigan's iteration over the
// greatest convex minorant and least concave majorant of the points (x_j, j),
// 1-based. Deviations carry the +1 of the ECDF jump; the result is divided by
// 2n to give ECDF units.
double dip_sorted(const std::vector<double>& xs) {
    const int n = static_cast<int>(xs.size());
    std::vector<double> x(static_cast<std::size_t>(n) + 1);
    std::copy(xs.begin(), xs.end(), x.begin() + 1);
    double dip = 1.0;
    if (n < 2 || x[n] == x[1]) return dip / (2.0 * n);

    // mn[j]: previous vertex of the minorant of points 1..j; mj[k]: next
    // vertex of the majorant of points k..n.
    std::vector<int> mn(n + 1), mj(n + 1);
    mn[1] = 1;
    for (int j = 2; j <= n; ++j) {
        mn[j] = j - 1;
        while (true) {
            const int a = mn[j];
            const int b = mn[a];
            if (a == 1 || (x[j] - x[a]) * (a - b) < (x[a] - x[b]) * (j - a)) break;
            mn[j] = b;
        }
    }
    mj[n] = n;
    for (int k = n - 1; k >= 1; --k) {
        mj[k] = k + 1;
        while (true) {
            const int a = mj[k];
            const int b = mj[a];
            if (a == n || (x[k] - x[a]) * (a - b) < (x[a] - x[b]) * (k - a)) break;
            mj[k] = b;
        }
    }

    int low = 1, high = n;
    std::vector<int> g, l;
    while (true) {
        g.clear();
        for (int k = high;; k = mn[k]) {
            g.push_back(k);
            if (k <= low) break;
        }
        std::reverse(g.begin(), g.end());
        l.clear();
        for (int k = low;; k = mj[k]) {
            l.push_back(k);
            if (k >= high) break;
        }
        const std::size_t ng = g.size(), nl = l.size();

        double d = 0.0;
        int new_low = low, new_high = high;
        if (ng == 2 && nl == 2) {
            d = 1.0;
        } else {
            std::size_t k = 0;
            for (std::size_t m = 0; m < nl; ++m) {
                while (k + 2 < ng && g[k + 1] <= l[m]) ++k;
                const double dx = l[m] - hull_at(x, g[k], g[k + 1], l[m], false) + 1.0;
                if (dx >= d) {
                    d = dx;
                    new_low = g[k];
                    new_high = l[m];
                }
            }
            std::size_t m = 0;
            for (k = 0; k < ng; ++k) {
                while (m + 2 < nl && l[m + 1] < g[k]) ++m;
                const double dx = hull_at(x, l[m], l[m + 1], g[k], true) - g[k] + 1.0;
                if (dx >= d) {
                    d = dx;
                    new_low = g[k];
                    new_high = l[m + 1];
                }
            }
        }
        if (d < dip) break;

        double dip_l = 0.0;
        for (std::size_t k = 0; k + 1 < ng && g[k] < new_low; ++k) {
            double max_t = 1.0;
            const int jb = g[k], je = g[k + 1];
            if (je - jb > 1 && x[je] != x[jb]) {
                for (int jj = jb; jj <= je; ++jj) max_t = std::max(max_t, jj - hull_at(x, jb, je, jj, false) + 1.0);
            }
            dip_l = std::max(dip_l, max_t);
        }
        double dip_u = 0.0;
        for (std::size_t m = nl - 1; m >= 1 && l[m] > new_high; --m) {
            double max_t = 1.0;
            const int jb = l[m - 1], je = l[m];
            if (je - jb > 1 && x[je] != x[jb]) {
                for (int jj = jb; jj <= je; ++jj) max_t = std::max(max_t, hull_at(x, jb, je, jj, true) - jj + 1.0);
            }
            dip_u = std::max(dip_u, max_t);
        }
        dip = std::max(dip, std::max(dip_l, dip_u));

        if (new_low == low && new_high == high) break;
        low = new_low;
        high = new_high;
    }
    return dip / (2.0 * n);
}

double mean_of(std::span<const double> v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double quantile_sorted(const std::vector<double>& s, double q) {
    const double pos = q * static_cast<double>(s.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, s.size() - 1);
    return s[lo] + (pos - static_cast<double>(lo)) * (s[hi] - s[lo]);
}

std::mutex& fftw_plan_mutex() {
    static std::mutex m;
    return m;
}

}  // namespace

double dip_statistic(std::span<const double> sample) {
    if (sample.size() < 4) throw ContractViolation("dip_statistic: needs at least 4 points");
    std::vector<double> xs(sample.begin(), sample.end());
    std::sort(xs.begin(), xs.end());
    return dip_sorted(xs);
}

DipNull::DipNull(std::size_t size, std::size_t draws, Rng& rng) : size_(size) {
    if (size < 4) throw ContractViolation("DipNull: size must be at least 4");
    if (draws < 1) throw ContractViolation("DipNull: needs at least one draw");
    null_.reserve(draws);
    std::vector<double> u(size);
    for (std::size_t b = 0; b < draws; ++b) {
        for (auto& v : u) v = draw_uniform(rng);
        std::sort(u.begin(), u.end());
        null_.push_back(dip_sorted(u));
    }
    std::sort(null_.begin(), null_.end());
}

double DipNull::p_value(double statistic) const {
    const auto it = std::lower_bound(null_.begin(), null_.end(), statistic);
    const auto above = static_cast<double>(null_.end() - it);
    return (1.0 + above) / (static_cast<double>(null_.size()) + 1.0);
}

DipResult dip_test(std::span<const double> sample, std::size_t calibration_draws, Rng& rng) {
    const double stat = dip_statistic(sample);
    DipNull null(sample.size(), calibration_draws, rng);
    return {stat, null.p_value(stat)};
}

DipResult dip_test(std::span<const double> sample, const DipNull& null) {
    if (sample.size() != null.size()) throw ContractViolation("dip_test: null calibrated for another size");
    const double stat = dip_statistic(sample);
    return {stat, null.p_value(stat)};
}

const DipNull& cached_dip_null(std::size_t size, std::size_t draws, std::uint64_t seed) {
    static std::mutex m;
    static std::map<std::tuple<std::size_t, std::size_t, std::uint64_t>, std::unique_ptr<DipNull>> cache;
    std::lock_guard<std::mutex> lock(m);
    auto& slot = cache[{size, draws, seed}];
    if (!slot) {
        Rng rng(derive_seed(seed, size));
        slot = std::make_unique<DipNull>(size, draws, rng);
    }
    return *slot;
}

double silverman_bandwidth(std::span<const double> sample) {
    if (sample.empty()) throw ContractViolation("silverman_bandwidth: empty sample");
    if (sample.size() < 2) return 0.0;
    std::vector<double> s(sample.begin(), sample.end());
    std::sort(s.begin(), s.end());
    const double sd = metrics::sample_sd(s);
    const double iqr = quantile_sorted(s, 0.75) - quantile_sorted(s, 0.25);
    double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
    return 0.9 * spread * std::pow(static_cast<double>(s.size()), -0.2);
}

Kde::Kde(std::span<const double> sample, double bandwidth) : sorted_(sample.begin(), sample.end()) {
    if (sorted_.empty()) throw ContractViolation("Kde: empty sample");
    std::sort(sorted_.begin(), sorted_.end());
    h_ = bandwidth > 0.0 ? bandwidth : silverman_bandwidth(sorted_);
    if (!(h_ > 0.0)) throw ContractViolation("Kde: sample has no spread");
}

double Kde::operator()(double x) const {
    const double cut = 8.0 * h_;
    const auto lo = std::lower_bound(sorted_.begin(), sorted_.end(), x - cut);
    const auto hi = std::upper_bound(lo, sorted_.end(), x + cut);
    double sum = 0.0;
    for (auto it = lo; it != hi; ++it) {
        const double u = (x - *it) / h_;
        sum += std::exp(-0.5 * u * u);
    }
    return sum / (static_cast<double>(sorted_.size()) * h_ * std::sqrt(2.0 * M_PI));
}

std::vector<double> Kde::evaluate(std::span<const double> grid) const {
    std::vector<double> out;
    out.reserve(grid.size());
    for (double g : grid) out.push_back((*this)(g));
    return out;
}

double map_estimate(std::span<const double> sample) {
    if (sample.empty()) throw ContractViolation("map_estimate: empty sample");
    const auto [mn, mx] = std::minmax_element(sample.begin(), sample.end());
    if (*mn == *mx) return *mn;
    const double h = silverman_bandwidth(sample);
    if (!(h > 0.0)) return *mn;
    const Kde kde(sample, h);

    constexpr int kGrid = 512;
    const double step = (*mx - *mn) / (kGrid - 1);
    double best_x = *mn, best_f = -1.0;
    for (int k = 0; k < kGrid; ++k) {
        const double g = *mn + step * k;
        const double f = kde(g);
        if (f > best_f) {
            best_f = f;
            best_x = g;
        }
    }

    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = best_x - step, b = best_x + step;
    double c = b - phi * (b - a), d = a + phi * (b - a);
    double fc = kde(c), fd = kde(d);
    for (int it = 0; it < 80 && b - a > 1e-12 * (1.0 + std::abs(best_x)); ++it) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = kde(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = kde(d);
        }
    }
    const double refined = 0.5 * (a + b);
    return kde(refined) >= best_f ? refined : best_x;
}

std::pair<double, double> hpd_interval(std::span<const double> sample, double mass) {
    if (!(mass > 0.0 && mass < 1.0)) throw ContractViolation("hpd_interval: mass must lie in (0, 1)");
    if (sample.size() < 20) throw ContractViolation("hpd_interval: needs at least 20 points");
    std::vector<double> s(sample.begin(), sample.end());
    std::sort(s.begin(), s.end());
    const auto k = static_cast<std::size_t>(std::ceil(mass * static_cast<double>(s.size())));
    std::size_t best = 0;
    double width = s[k - 1] - s[0];
    for (std::size_t i = 1; i + k <= s.size(); ++i) {
        const double w = s[i + k - 1] - s[i];
        if (w < width) {
            width = w;
            best = i;
        }
    }
    return {s[best], s[best + k - 1]};
}

double forecastability(std::span<const double> sample, std::size_t block) {
    if (sample.size() < 64) throw ContractViolation("forecastability: needs at least 64 points");
    if (block < 1) throw ContractViolation("forecastability: block must be positive");
    const std::size_t n = sample.size();
    const auto [lo, hi] = std::minmax_element(sample.begin(), sample.end());
    if (*lo == *hi) return 1.0;
    const double mu = mean_of(sample);
    std::vector<double> in(n);
    for (std::size_t i = 0; i < n; ++i) in[i] = sample[i] - mu;
    const std::size_t nc = n / 2 + 1;
    fftw_complex* out = fftw_alloc_complex(nc);
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(fftw_plan_mutex());
        plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.data(), out, FFTW_ESTIMATE);
    }
    fftw_execute(plan);

    // Positive frequencies 1..floor((n-1)/2); the Nyquist bin is left out.
    const std::size_t m = (n - 1) / 2;
    std::vector<double> pgram(m);
    for (std::size_t k = 1; k <= m; ++k) pgram[k - 1] = out[k][0] * out[k][0] + out[k][1] * out[k][1];
    {
        std::lock_guard<std::mutex> lock(fftw_plan_mutex());
        fftw_destroy_plan(plan);
    }
    fftw_free(out);

    const std::size_t blocks = m / block;
    std::vector<double> s(blocks, 0.0);
    for (std::size_t b = 0; b < blocks; ++b)
        for (std::size_t k = 0; k < block; ++k) s[b] += pgram[b * block + k];
    const double total = std::accumulate(s.begin(), s.end(), 0.0);
    if (!(total > 0.0) || blocks < 2) return 1.0;
    double h = 0.0;
    for (double v : s) {
        const double p = v / total;
        if (p > 0.0) h -= p * std::log(p);
    }
    return std::clamp(1.0 - h / std::log(static_cast<double>(blocks)), 0.0, 1.0);
}

EstimateSelection select_estimates(const PosteriorChain& chain, const SelectionOptions& options) {
    if (chain.y_draws.size() == 0) throw ContractViolation("select_estimates: chain has no y draws");
    const auto draws = static_cast<std::size_t>(chain.y_draws.rows());
    const auto n = static_cast<std::size_t>(chain.y_draws.cols());
    const DipNull& null = cached_dip_null(draws, options.calibration_draws, options.calibration_seed);

    EstimateSelection out;
    out.y_point.resize(n);
    out.summaries.resize(n);
    std::vector<double> col(draws);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t r = 0; r < draws; ++r)
            col[r] = chain.y_draws(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i));
        MarginalSummary& s = out.summaries[i];
        s.site = i + 1;
        s.mean = mean_of(col);
        s.map_estimate = map_estimate(col);
        const DipResult dip = dip_test(col, null);
        s.dip_statistic = dip.statistic;
        s.dip_pvalue = dip.p_value;
        s.multimodal = dip.p_value < options.alpha;
        s.omega = draws >= 64 ? forecastability(col) : 0.0;
        s.chosen = s.multimodal ? s.map_estimate : s.mean;
        out.y_point[i] = s.chosen;
        if (s.multimodal) out.m_ht.push_back(i + 1);
    }

    const auto top = static_cast<std::size_t>(std::ceil(0.01 * static_cast<double>(n)));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return out.summaries[a].omega > out.summaries[b].omega;
    });
    for (std::size_t k = 0; k < std::min(top, n); ++k) out.omega_ht.push_back(order[k] + 1);
    std::sort(out.omega_ht.begin(), out.omega_ht.end());
    return out;
}

std::vector<double> noise_density_estimate(const PosteriorChain& chain, std::span<const double> grid) {
    if (chain.noise_predictive_draws.size() == 0)
        throw ContractViolation("noise_density_estimate: no predictive draws");
    const auto& z = chain.noise_predictive_draws;
    const Kde kde(std::span<const double>(z.data(), static_cast<std::size_t>(z.size())));
    return kde.evaluate(grid);
}

}  // namespace dnrr::estimation
