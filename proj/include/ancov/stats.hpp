#pragma once

#include <cstdint>
#include <vector>

namespace ancov {

// Standard normal cdf.
double normal_cdf(double x);

// Upper regularized incomplete gamma Q(a, x) = Gamma(a,x)/Gamma(a).
double gamma_q(double a, double x);

// Survival function of the chi-square distribution with df degrees of freedom.
double chi_square_sf(double x, int df);

// One-sample Kolmogorov-Smirnov statistic: sup |F_n - F| for pre-computed
// cdf values F(x_(1)) <= ... <= F(x_(n)) of the sorted sample.
double ks_statistic(const std::vector<double>& sorted_cdf_values);

// Asymptotic p-value P(D_n > d) via the Kolmogorov series with the usual
// finite-n effective argument; adequate for n >= ~500.
double ks_p_value(double d, std::size_t n);

// Pearson fit of observed integer counts against expected bin counts;
// bins with expected < min_expected are pooled into their neighbor.
struct ChiSquareResult {
    double statistic;
    int df;
    double p_value;
};
ChiSquareResult chi_square_gof(const std::vector<double>& observed,
                               const std::vector<double>& expected,
                               double min_expected = 5.0,
                               int df_reduction = 1);

// Two-sample chi-square homogeneity test on shared bins.
ChiSquareResult chi_square_two_sample(const std::vector<double>& counts_a,
                                      const std::vector<double>& counts_b,
                                      double min_total = 5.0);

// Streaming moments through the fourth power plus count; merge order fixed by
// the caller so reductions stay bit-stable.
struct MomentAccumulator {
    std::uint64_t n = 0;
    double sum = 0, sum2 = 0, sum3 = 0, sum4 = 0;

    void add(double x) {
        n += 1;
        sum += x;
        double x2 = x * x;
        sum2 += x2;
        sum3 += x2 * x;
        sum4 += x2 * x2;
    }
    double mean() const;
    double variance() const;             // unbiased
    double central_moment(int k) const;  // k in {2,3,4}, biased plug-in
    double mean_stderr() const;
    double variance_stderr() const;      // via the fourth-moment formula
};

}  // namespace ancov
