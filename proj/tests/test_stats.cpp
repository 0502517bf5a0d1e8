#include <doctest.h>

#include <cmath>

#include "ancov/rng.hpp"
#include "ancov/stats.hpp"

using namespace ancov;

TEST_CASE("normal cdf reference points") {
    CHECK(normal_cdf(0.0) == doctest::Approx(0.5));
    CHECK(normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-9));
    CHECK(normal_cdf(-1.0) == doctest::Approx(0.15865525393145705).epsilon(1e-12));
}

TEST_CASE("chi-square survival function reference points") {
    // classic table values
    CHECK(chi_square_sf(3.841458820694124, 1) == doctest::Approx(0.05).epsilon(1e-9));
    CHECK(chi_square_sf(18.307038053275146, 10) == doctest::Approx(0.05).epsilon(1e-9));
    CHECK(chi_square_sf(0.0, 5) == 1.0);
}

TEST_CASE("ks statistic and p-value behave sensibly") {
    // perfectly uniform quantiles: D = 1/(2n) after the max over both sides
    std::vector<double> q;
    int n = 1000;
    for (int i = 0; i < n; ++i) q.push_back((i + 0.5) / n);
    double d = ks_statistic(q);
    CHECK(d == doctest::Approx(0.5 / n).epsilon(1e-9));
    CHECK(ks_p_value(d, n) > 0.99);
    // gross misfit
    std::vector<double> bad(n, 0.9);
    CHECK(ks_p_value(ks_statistic(bad), n) < 1e-6);
}

TEST_CASE("ks test accepts genuinely normal samples") {
    RngStream rng(5, 0);
    int n = 2000;
    std::vector<double> x(n);
    for (auto& v : x) {
        // Box-Muller from two uniforms
        double u1 = rng.uniform(), u2 = rng.uniform();
        v = std::sqrt(-2 * std::log(u1)) * std::cos(2 * M_PI * u2);
    }
    std::sort(x.begin(), x.end());
    std::vector<double> q(n);
    for (int i = 0; i < n; ++i) q[i] = normal_cdf(x[i]);
    CHECK(ks_p_value(ks_statistic(q), n) > 0.01);
}

TEST_CASE("chi-square gof pools sparse bins") {
    std::vector<double> obs = {48, 52, 1, 0};
    std::vector<double> exp = {50, 50, 0.5, 0.5};
    auto res = chi_square_gof(obs, exp);
    CHECK(res.df >= 1);
    CHECK(res.p_value > 0.05);
}

TEST_CASE("two-sample chi-square on identical and disjoint counts") {
    std::vector<double> a = {100, 200, 300};
    auto same = chi_square_two_sample(a, a);
    CHECK(same.p_value > 0.99);
    std::vector<double> b = {300, 200, 100};
    auto diff = chi_square_two_sample(a, b);
    CHECK(diff.p_value < 1e-6);
}

TEST_CASE("moment accumulator matches direct formulas") {
    MomentAccumulator acc;
    std::vector<double> xs = {1.0, 2.0, 4.0, 8.0, 16.0};
    for (double x : xs) acc.add(x);
    double mean = (1 + 2 + 4 + 8 + 16) / 5.0;
    CHECK(acc.mean() == doctest::Approx(mean));
    double var = 0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= 4;
    CHECK(acc.variance() == doctest::Approx(var));
    CHECK(acc.mean_stderr() == doctest::Approx(std::sqrt(var / 5)));
    CHECK(acc.variance_stderr() > 0);
}
