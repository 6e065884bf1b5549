#pragma once

#include <cstddef>
#include <vector>

// Small statistical comparisons shared by tests, the verification suites and
// the acceptance checks.

namespace mcsim::stats {

struct Chi2Result {
    double statistic = 0;
    int df = 0;              // after sparse-bin pooling
    double critical_001 = 0; // chi-square upper 0.1% point for df
    bool pass = false;       // statistic <= critical_001
};

// Two-sample chi-square homogeneity test over aligned histograms.  Adjacent
// bins are pooled until each holds a combined count of at least 5.
Chi2Result two_sample_chi2(const std::vector<double>& a, const std::vector<double>& b);

// Chi-square upper 0.1% critical value, df in [1, 30].
double chi2_critical_001(int df);

// Two-sample Kolmogorov-Smirnov distance between empirical distributions.
double ks_two_sample(std::vector<double> a, std::vector<double> b);

// KS rejection threshold at significance 0.001 for sample sizes n and m.
double ks_critical_001(double n, double m);

} // namespace mcsim::stats
