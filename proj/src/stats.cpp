#include "mcsim/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mcsim::stats {

double chi2_critical_001(int df) {
    static const double crit[30] = {
        10.828, 13.816, 16.266, 18.467, 20.515, 22.458, 24.322, 26.124,
        27.877, 29.588, 31.264, 32.909, 34.528, 36.123, 37.697, 39.252,
        40.790, 42.312, 43.820, 45.315, 46.797, 48.268, 49.728, 51.179,
        52.620, 54.052, 55.476, 56.892, 58.301, 59.703};
    if (df < 1 || df > 30)
        throw std::invalid_argument("chi2_critical_001: df out of tabulated range");
    return crit[df - 1];
}

Chi2Result two_sample_chi2(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.empty())
        throw std::invalid_argument("two_sample_chi2: histograms must align and be nonempty");

    // Pool sparse bins left to right; a sparse tail joins the last pooled bin.
    std::vector<std::pair<double, double>> pooled;
    double ca = 0, cb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ca += a[i];
        cb += b[i];
        if (ca + cb >= 5.0) {
            pooled.push_back({ca, cb});
            ca = cb = 0;
        }
    }
    if (ca + cb > 0) {
        if (pooled.empty()) {
            pooled.push_back({ca, cb});
        } else {
            pooled.back().first += ca;
            pooled.back().second += cb;
        }
    }
    if (pooled.size() < 2)
        throw std::invalid_argument("two_sample_chi2: too little data after pooling");

    double na = 0, nb = 0;
    for (auto [x, y] : pooled) {
        na += x;
        nb += y;
    }
    if (na <= 0 || nb <= 0)
        throw std::invalid_argument("two_sample_chi2: one sample is empty");

    double k1 = std::sqrt(nb / na), k2 = std::sqrt(na / nb);
    Chi2Result r;
    for (auto [x, y] : pooled) {
        double d = k1 * x - k2 * y;
        r.statistic += d * d / (x + y);
    }
    r.df = static_cast<int>(pooled.size()) - 1;
    r.critical_001 = chi2_critical_001(r.df);
    r.pass = r.statistic <= r.critical_001;
    return r;
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty())
        throw std::invalid_argument("ks_two_sample: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double d = 0;
    std::size_t i = 0, j = 0;
    auto fa = [&] { return static_cast<double>(i) / static_cast<double>(a.size()); };
    auto fb = [&] { return static_cast<double>(j) / static_cast<double>(b.size()); };
    while (i < a.size() && j < b.size()) {
        double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == x) ++i; // step through ties together
        while (j < b.size() && b[j] == x) ++j;
        d = std::max(d, std::fabs(fa() - fb()));
    }
    return d;
}

double ks_critical_001(double n, double m) {
    // c(alpha) = sqrt(-ln(alpha/2) / 2) evaluated at alpha = 0.001.
    const double c = 1.94947;
    return c * std::sqrt((n + m) / (n * m));
}

} // namespace mcsim::stats
