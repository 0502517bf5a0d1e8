#include "ancov/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ancov {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

namespace {

// Lanczos-free continued fraction / series pair for the incomplete gamma.
double gamma_p_series(double a, double x) {
    double ap = a, sum = 1.0 / a, del = sum;
    for (int i = 0; i < 500; ++i) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::abs(del) < std::abs(sum) * 1e-15) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double gamma_q_cf(double a, double x) {
    double b = x + 1.0 - a, c = 1e300, d = 1.0 / b, h = d;
    for (int i = 1; i <= 500; ++i) {
        double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < 1e-300) d = 1e-300;
        c = b + an / c;
        if (std::abs(c) < 1e-300) c = 1e-300;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-15) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double gamma_q(double a, double x) {
    if (x < 0 || a <= 0) throw std::invalid_argument("gamma_q: bad arguments");
    if (x == 0) return 1.0;
    if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
    return gamma_q_cf(a, x);
}

double chi_square_sf(double x, int df) {
    if (df <= 0) throw std::invalid_argument("chi_square_sf: df must be positive");
    if (x <= 0) return 1.0;
    return gamma_q(0.5 * df, 0.5 * x);
}

double ks_statistic(const std::vector<double>& q) {
    const double n = static_cast<double>(q.size());
    double d = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        d = std::max(d, (i + 1) / n - q[i]);
        d = std::max(d, q[i] - i / n);
    }
    return d;
}

double ks_p_value(double d, std::size_t n) {
    if (n == 0) return 1.0;
    double sn = std::sqrt(static_cast<double>(n));
    double lambda = (sn + 0.12 + 0.11 / sn) * d;
    double sum = 0.0, sign = 1.0;
    for (int k = 1; k <= 100; ++k) {
        double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += sign * term;
        sign = -sign;
        if (term < 1e-12) break;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

ChiSquareResult chi_square_gof(const std::vector<double>& observed,
                               const std::vector<double>& expected, double min_expected,
                               int df_reduction) {
    if (observed.size() != expected.size() || observed.empty())
        throw std::invalid_argument("chi_square_gof: size mismatch");
    // pool small-expectation bins left to right
    std::vector<double> obs, exp;
    double po = 0, pe = 0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        po += observed[i];
        pe += expected[i];
        if (pe >= min_expected) {
            obs.push_back(po);
            exp.push_back(pe);
            po = pe = 0;
        }
    }
    if (pe > 0 || po > 0) {
        if (exp.empty()) {
            obs.push_back(po);
            exp.push_back(pe);
        } else {
            obs.back() += po;
            exp.back() += pe;
        }
    }
    double stat = 0;
    for (std::size_t i = 0; i < obs.size(); ++i) {
        double diff = obs[i] - exp[i];
        stat += diff * diff / exp[i];
    }
    int df = static_cast<int>(obs.size()) - df_reduction;
    if (df < 1) df = 1;
    return {stat, df, chi_square_sf(stat, df)};
}

ChiSquareResult chi_square_two_sample(const std::vector<double>& counts_a,
                                      const std::vector<double>& counts_b, double min_total) {
    if (counts_a.size() != counts_b.size() || counts_a.empty())
        throw std::invalid_argument("chi_square_two_sample: size mismatch");
    double na = 0, nb = 0;
    for (double c : counts_a) na += c;
    for (double c : counts_b) nb += c;
    if (na == 0 || nb == 0) return {0.0, 1, 1.0};
    double ra = std::sqrt(nb / na), rb = std::sqrt(na / nb);
    // pool bins whose combined count is small
    std::vector<double> a, b;
    double pa = 0, pb = 0;
    for (std::size_t i = 0; i < counts_a.size(); ++i) {
        pa += counts_a[i];
        pb += counts_b[i];
        if (pa + pb >= min_total) {
            a.push_back(pa);
            b.push_back(pb);
            pa = pb = 0;
        }
    }
    if (pa + pb > 0) {
        if (a.empty()) {
            a.push_back(pa);
            b.push_back(pb);
        } else {
            a.back() += pa;
            b.back() += pb;
        }
    }
    double stat = 0;
    int used = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double tot = a[i] + b[i];
        if (tot <= 0) continue;
        double diff = ra * a[i] - rb * b[i];
        stat += diff * diff / tot;
        ++used;
    }
    int df = std::max(used - 1, 1);
    return {stat, df, chi_square_sf(stat, df)};
}

double MomentAccumulator::mean() const { return n ? sum / static_cast<double>(n) : 0.0; }

double MomentAccumulator::variance() const {
    if (n < 2) return 0.0;
    double nn = static_cast<double>(n);
    double m = mean();
    double v = (sum2 - nn * m * m) / (nn - 1.0);
    return v > 0 ? v : 0.0;
}

double MomentAccumulator::central_moment(int k) const {
    double nn = static_cast<double>(n);
    if (n == 0) return 0.0;
    double m = mean();
    double m2 = sum2 / nn - m * m;
    if (k == 2) return m2 > 0 ? m2 : 0.0;
    double m3 = sum3 / nn - 3 * m * sum2 / nn + 2 * m * m * m;
    if (k == 3) return m3;
    double m4 = sum4 / nn - 4 * m * sum3 / nn + 6 * m * m * sum2 / nn - 3 * m * m * m * m;
    if (k == 4) return m4 > 0 ? m4 : 0.0;
    throw std::invalid_argument("central_moment: k must be 2, 3 or 4");
}

double MomentAccumulator::mean_stderr() const {
    if (n < 2) return 0.0;
    return std::sqrt(variance() / static_cast<double>(n));
}

double MomentAccumulator::variance_stderr() const {
    if (n < 2) return 0.0;
    double nn = static_cast<double>(n);
    double m4 = central_moment(4), m2 = central_moment(2);
    double v = (m4 - m2 * m2 * (nn - 3) / (nn - 1)) / nn;
    return v > 0 ? std::sqrt(v) : 0.0;
}

}  // namespace ancov
