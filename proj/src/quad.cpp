#include "ancov/quad.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

namespace ancov {

void QuadConfig::validate() const {
    if (!(abs_tol > 0) || !(rel_tol > 0) || !(tail_mass > 0) || max_subdiv <= 0)
        throw std::invalid_argument("QuadConfig: tolerances and limits must be positive");
    if (!(tail_mass < abs_tol))
        throw std::invalid_argument("QuadConfig: tail_mass must be smaller than abs_tol");
}

QuadConfig QuadConfig::tightened(double factor) const {
    QuadConfig q = *this;
    q.abs_tol *= factor;
    q.rel_tol *= factor;
    return q;
}

namespace {

// Kronrod 15 nodes on [-1,1] (positive half) and weights; Gauss 7 weights embedded.
constexpr double kXgk[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};
constexpr double kWgk[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};
constexpr double kWg[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

struct Panel {
    double a, b, value, error;
    bool operator<(const Panel& o) const { return error < o.error; }
};

Panel evaluate_panel(const Fn1& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    double fv[15];
    for (int i = 0; i < 7; ++i) {
        fv[i] = f(c - h * kXgk[i]);
        fv[14 - i] = f(c + h * kXgk[i]);
    }
    fv[7] = f(c);
    double resk = kWgk[7] * fv[7];
    double resg = kWg[3] * fv[7];
    for (int i = 0; i < 7; ++i) {
        resk += kWgk[i] * (fv[i] + fv[14 - i]);
        if (i % 2 == 1) resg += kWg[i / 2] * (fv[i] + fv[14 - i]);
    }
    double value = resk * h;
    double error = std::abs((resk - resg) * h);
    // scale the raw difference the usual way so the estimate is not wildly optimistic
    double resabs = 0.0;
    for (int i = 0; i < 15; ++i) resabs += std::abs(fv[i]);
    resabs *= std::abs(h) * 2.0 / 15.0;
    if (resabs > 0 && error > 0) {
        double r = std::pow(200.0 * error / resabs, 1.5);
        if (r < 1.0) error = resabs * r;
    }
    return {a, b, value, error};
}

}  // namespace

PanelResult gk15(const Fn1& f, double a, double b) {
    Panel p = evaluate_panel(f, a, b);
    return {p.value, p.error};
}

double integrate(const Fn1& f, double a, double b, const QuadConfig& quad,
                 const std::vector<double>& breakpoints) {
    if (a == b) return 0.0;
    if (a > b) throw std::invalid_argument("integrate: reversed interval");

    std::vector<double> cuts{a, b};
    for (double x : breakpoints)
        if (x > a && x < b) cuts.push_back(x);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    std::priority_queue<Panel> heap;
    double total = 0.0, toterr = 0.0;
    for (size_t i = 0; i + 1 < cuts.size(); ++i) {
        Panel p = evaluate_panel(f, cuts[i], cuts[i + 1]);
        total += p.value;
        toterr += p.error;
        heap.push(p);
    }

    int splits = 0;
    while (toterr > std::max(quad.abs_tol, quad.rel_tol * std::abs(total))) {
        if (splits++ >= quad.max_subdiv)
            throw NumericError("integrate: subdivision limit reached", toterr);
        Panel worst = heap.top();
        heap.pop();
        double mid = 0.5 * (worst.a + worst.b);
        if (mid <= worst.a || mid >= worst.b)
            throw NumericError("integrate: interval too small to split", toterr);
        Panel left = evaluate_panel(f, worst.a, mid);
        Panel right = evaluate_panel(f, mid, worst.b);
        total += left.value + right.value - worst.value;
        toterr += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }
    if (!std::isfinite(total)) throw NumericError("integrate: non-finite result", toterr);
    return total;
}

double integrate_exp_weight(const Fn1& g, double rate, const QuadConfig& quad,
                            const std::vector<double>& g_breaks) {
    if (!(rate > 0)) throw std::invalid_argument("integrate_exp_weight: rate must be positive");
    auto h = [&](double p) {
        if (p <= 0) p = std::numeric_limits<double>::min();
        return g(-std::log(p) / rate);
    };
    std::vector<double> cuts;
    cuts.reserve(g_breaks.size());
    for (double u : g_breaks)
        if (u > 0) cuts.push_back(std::exp(-rate * u));
    return integrate(h, 0.0, 1.0, quad, cuts);
}

}  // namespace ancov
