#include "ancov/formulas.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <unordered_map>
#include <vector>

namespace ancov {

namespace {

// locations where the survival function of the law has slope breaks
std::vector<double> law_kinks(const LengthLaw& law) {
    switch (law.kind()) {
        case LengthLaw::Kind::Deterministic:
            return {law.param1()};
        case LengthLaw::Kind::Exponential:
            return {};
        case LengthLaw::Kind::UniformInterval:
            return {law.param1(), law.param2()};
        case LengthLaw::Kind::DiscreteAtoms: {
            std::vector<double> k;
            for (auto& [v, p] : law.atom_list()) k.push_back(v);
            return k;
        }
    }
    return {};
}

double bits_key(double x) { return x == 0.0 ? 0.0 : x; }  // collapse -0.0

struct DoubleKeyHash {
    std::size_t operator()(double x) const {
        std::uint64_t b;
        std::memcpy(&b, &x, sizeof b);
        return std::hash<std::uint64_t>()(b);
    }
};

using MemoMap = std::unordered_map<double, double, DoubleKeyHash>;

// uniform-grid cubic Hermite table with fourth-order finite-difference slopes
class HermiteTable {
  public:
    template <class F>
    HermiteTable(const F& f, double lo, double hi, int n) : lo_(lo), hi_(hi) {
        n = std::max(n, 8);
        h_ = (hi - lo) / n;
        y_.resize(n + 1);
        m_.resize(n + 1);
        for (int i = 0; i <= n; ++i) y_[i] = f(lo + i * h_);
        auto slope = [&](int i) {
            if (i >= 2 && i + 2 < static_cast<int>(y_.size()))
                return (y_[i - 2] - 8 * y_[i - 1] + 8 * y_[i + 1] - y_[i + 2]) / (12 * h_);
            if (i < 2)
                return (-25 * y_[i] + 48 * y_[i + 1] - 36 * y_[i + 2] + 16 * y_[i + 3] -
                        3 * y_[i + 4]) /
                       (12 * h_);
            return (25 * y_[i] - 48 * y_[i - 1] + 36 * y_[i - 2] - 16 * y_[i - 3] +
                    3 * y_[i - 4]) /
                   (12 * h_);
        };
        for (int i = 0; i <= n; ++i) m_[i] = slope(i);
    }

    double operator()(double x) const {
        if (x <= lo_) return y_.front();
        if (x >= hi_) return y_.back();
        double u = (x - lo_) / h_;
        int i = std::min(static_cast<int>(u), static_cast<int>(y_.size()) - 2);
        double s = (x - (lo_ + i * h_)) / h_;
        double s2 = s * s, s3 = s2 * s;
        double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s;
        double h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
        return h00 * y_[i] + h10 * h_ * m_[i] + h01 * y_[i + 1] + h11 * h_ * m_[i + 1];
    }

  private:
    double lo_, hi_, h_;
    std::vector<double> y_, m_;
};

// Hermite tables split at integrand kinks so every segment is smooth.
class SegmentedTable {
  public:
    template <class F>
    SegmentedTable(const F& f, double lo, double hi, std::vector<double> cuts,
                   int points_per_segment) {
        cuts.push_back(lo);
        cuts.push_back(hi);
        std::sort(cuts.begin(), cuts.end());
        cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
            double a = cuts[i], b = cuts[i + 1];
            if (a < lo || b > hi || b - a < 1e-14) continue;
            edges_.push_back(b);
            tables_.emplace_back(f, a, b, points_per_segment);
        }
    }

    double operator()(double x) const {
        auto it = std::lower_bound(edges_.begin(), edges_.end(), x);
        std::size_t i = std::min(static_cast<std::size_t>(it - edges_.begin()),
                                 tables_.size() - 1);
        return tables_[i](x);
    }

  private:
    std::vector<double> edges_;
    std::vector<HermiteTable> tables_;
};

}  // namespace

HomogeneousParams as_homogeneous(const ModelSpec& spec) {
    if (!spec.homogeneous())
        throw std::invalid_argument("as_homogeneous: spec is not homogeneous");
    return {spec.kappa(), spec.alpha(), spec.length_law()};
}

// --------------------------------------------------------------- J, A, means

double J_hom(const HomogeneousParams& params, double u) {
    if (u < 0) throw std::invalid_argument("J_hom: gap must be >= 0");
    if (params.kappa == 0) return 1.0;
    return std::exp(-params.kappa * params.lengths.mean_excess(u));
}

namespace {

// intensity of clones covering both x and y: int_y^inf P(L_t >= t-x) c(dt)
double clone_cover_mass(const ModelSpec& spec, double x, double y, const QuadConfig& quad) {
    if (x > y) throw std::invalid_argument("clone_cover_mass: need x <= y");
    const auto& c = spec.clones;
    const auto& lens = spec.lengths;

    if (c.kind() != IntensityMeasure::Kind::Density) {
        // piecewise-exact: on each cell where the clone rate and the length law
        // are both fixed, int_a^b S(t-x) dt = me(a-x) - me(b-x)
        std::vector<double> cuts{y};
        for (double b : c.breakpoints())
            if (b > y) cuts.push_back(b);
        for (double b : lens.breakpoints())
            if (b > y) cuts.push_back(b);
        std::sort(cuts.begin(), cuts.end());
        cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
        double total = 0;
        for (std::size_t i = 0; i < cuts.size(); ++i) {
            double a = cuts[i];
            double b = (i + 1 < cuts.size()) ? cuts[i + 1] : kInf;
            double rate = c.rate_at(0.5 * (a + std::min(b, a + 1.0)));
            if (rate == 0) continue;
            const LengthLaw& law = lens.at(0.5 * (a + std::min(b, a + 1.0)));
            double hi_excess = std::isfinite(b) ? law.mean_excess(b - x) : 0.0;
            total += rate * (law.mean_excess(a - x) - hi_excess);
        }
        return total;
    }

    // density intensity: adaptive quadrature, truncated where the survival
    // envelope drops the remaining mass below tail_mass
    double t_hi = y + 1.0;
    auto worst_excess = [&](double u) {
        double w = 0;
        for (auto& l : lens.laws()) w = std::max(w, l.mean_excess(u));
        return w;
    };
    while (c.sup_rate() * worst_excess(t_hi - x) > quad.tail_mass && t_hi - x < 1e9)
        t_hi = x + 2.0 * (t_hi - x);
    auto g = [&](double t) { return c.rate_at(t) * lens.at(t).survival(std::max(t - x, 0.0)); };
    std::vector<double> cuts;
    for (double b : lens.breakpoints()) cuts.push_back(b);
    for (auto& l : lens.laws())
        for (double k : law_kinks(l)) cuts.push_back(x + k);
    return integrate(g, y, t_hi, quad, cuts);
}

}  // namespace

double J_general(const ModelSpec& spec, double x, double y, const QuadConfig& quad) {
    double mass = clone_cover_mass(spec, x, y, quad);
    if (!std::isfinite(mass)) throw NumericError("J_general: divergent exponent");
    return std::exp(-mass);
}

double A_gap(const ModelSpec& spec, double x, double y, const QuadConfig& quad) {
    if (x > y) throw std::invalid_argument("A_gap: need x <= y");
    return std::exp(-spec.anchors.measure(x, y, quad));
}

double mean_clone_count(const ModelSpec& spec, double x, const QuadConfig& quad) {
    return clone_cover_mass(spec, x, x, quad);
}

double mean_anchored_count(const ModelSpec& spec, double x, const QuadConfig& quad) {
    if (spec.anchors.is_zero()) return 0.0;
    if (spec.homogeneous()) {
        double alpha = spec.alpha();
        return spec.kappa() *
               spec.length_law().expect(
                   [&](double t) { return t * (1.0 - std::exp(-alpha * t)); }, quad);
    }
    // E over the law at z of 1{L >= z-x} (1 - e^{-a([z-L, z])}), then dz against c
    auto inner = [&](double z) {
        const LengthLaw& law = spec.lengths.at(z);
        double lo = std::max(z - x, 0.0);
        auto weight = [&](double t) {
            return 1.0 - std::exp(-spec.anchors.measure(z - t, z, quad));
        };
        if (law.is_discrete()) {
            double s = 0;
            for (auto& [t, p] : law.atom_list())
                if (t >= lo) s += p * weight(t);
            return s;
        }
        double t_hi = law.quantile(1.0 - quad.tail_mass);
        if (t_hi <= lo) return 0.0;
        QuadConfig inner_quad = quad.tightened(1e-2);
        return integrate([&](double t) { return law.density(t) * weight(t); }, lo, t_hi,
                         inner_quad, law_kinks(law));
    };
    double z_hi = x + 1.0;
    auto worst_excess = [&](double u) {
        double w = 0;
        for (auto& l : spec.lengths.laws()) w = std::max(w, l.mean_excess(u));
        return w;
    };
    while (spec.clones.sup_rate() * worst_excess(z_hi - x) > quad.tail_mass && z_hi - x < 1e9)
        z_hi = x + 2.0 * (z_hi - x);
    auto g = [&](double z) { return spec.clones.rate_at(z) * inner(z); };
    std::vector<double> cuts;
    for (double b : spec.clones.breakpoints()) cuts.push_back(b);
    for (double b : spec.lengths.breakpoints()) cuts.push_back(b);
    return integrate(g, x, z_hi, quad, cuts);
}

// ------------------------------------------------- anchor-gap substitutions

namespace {

// Change of variables p = P(no anchor between the point and its nearest
// neighbor on one side). Real coordinates live on p in (atom, 1]; p <= atom
// encodes "no anchor at all on that side".
struct AnchorSideMap {
    const IntensityMeasure* anchors;
    double origin;
    bool leftward;
    QuadConfig quad;

    std::optional<double> position(double p) const {
        if (p <= 0) return std::nullopt;
        if (p >= 1) return origin;
        double mass = -std::log(p);
        return leftward ? anchors->invert_mass_left(origin, mass, quad)
                        : anchors->invert_mass_right(origin, mass, quad);
    }
};

// J(a,b) with open ends: a missing (-inf) or b missing (+inf) contributes 1.
double J_open(const ModelSpec& spec, std::optional<double> a, std::optional<double> b,
              const QuadConfig& quad) {
    if (!a || !b) return 1.0;
    return J_general(spec, *a, *b, quad);
}

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

}  // namespace

double r_one_point(const ModelSpec& spec, double z, const QuadConfig& quad) {
    QuadConfig inner = quad.tightened(1e-2);
    AnchorSideMap left{&spec.anchors, z, true, inner};
    AnchorSideMap right{&spec.anchors, z, false, inner};
    auto integrand_q = [&](std::optional<double> x, double q) {
        auto y = right.position(q);
        return clamp01(J_open(spec, x, z, inner) * J_open(spec, z, y, inner) /
                       J_open(spec, x, y, inner));
    };
    auto outer = [&](double p) {
        auto x = left.position(p);
        return integrate([&](double q) { return integrand_q(x, q); }, 0.0, 1.0, inner);
    };
    double v = integrate(outer, 0.0, 1.0, quad.tightened(0.5));
    if (!std::isfinite(v)) throw NumericError("r_one_point: non-finite result");
    return clamp01(v);
}

// ------------------------------------------------------ stationary two-point

struct TwoPointAnalysis::Impl {
    HomogeneousParams params;
    QuadConfig quad;        // user-facing tolerances
    QuadConfig quad_in;     // tightened, for inner kernels
    double kappa, alpha;
    double ell_sup;         // top of the length support (may be +inf)
    double rho = 1, jw = 1;
    double z_cut = 0;       // covariance kernel support / truncation bound
    double k_top = 0;       // K is constant j beyond this point
    std::vector<double> kinks;
    std::optional<SegmentedTable> ktab;
    double r2_norm = 1.0;
    double r2_total_raw = 0.0;

    mutable std::mutex mu;
    mutable MemoMap memo_r1, memo_r2d, memo_f, memo_rbar0;

    double me(double u) const { return params.lengths.mean_excess(std::max(u, 0.0)); }
    double J(double u) const { return kappa == 0 ? 1.0 : std::exp(-kappa * me(u)); }

    explicit Impl(HomogeneousParams p, QuadConfig q) : params(std::move(p)), quad(q) {
        quad.validate();
        if (!(params.alpha > 0))
            throw std::invalid_argument("TwoPointAnalysis: anchor rate must be positive");
        if (!(params.kappa >= 0))
            throw std::invalid_argument("TwoPointAnalysis: clone rate must be >= 0");
        quad_in = quad.tightened(1e-2);
        kappa = params.kappa;
        alpha = params.alpha;
        ell_sup = params.lengths.support_top();
        kinks = law_kinks(params.lengths);

        // point beyond which J(t)/J(t+x) differs from 1 by less than ~1e-14
        if (kappa == 0) {
            k_top = 0;
        } else if (std::isfinite(ell_sup)) {
            k_top = ell_sup;
        } else {
            k_top = 1.0;
            while (kappa * me(k_top) > 1e-14 && k_top < 1e6) k_top *= 2.0;
        }

        jw = integrate_exp_weight([&](double x) { return J(x); }, alpha, quad_in, kinks);
        rho = compute_rho();

        if (k_top > 0 && kappa > 0) {
            auto kraw = [&](double t) { return K_raw(t); };
            std::vector<double> cuts;
            for (double k : kinks)
                if (k > 0 && k < k_top) cuts.push_back(k);
            ktab.emplace(kraw, 0.0, k_top, cuts, 1024);
        }

        if (std::isfinite(ell_sup)) {
            z_cut = 2.0 * ell_sup;
        } else {
            // drop the kernel tail once its exponential envelope is below tail_mass
            double z = 1.0;
            double lift = std::exp(kappa * me(0));
            while (lift * (2.0 / alpha) * (2.0 + alpha * z) * std::exp(-alpha * z) >
                       quad.tail_mass &&
                   z < 1e6)
                z += 1.0 / alpha;
            z_cut = z;
        }
        if (kappa > 0) normalize_r2();
    }

    double compute_rho() const {
        auto inner = [&](double u) {
            std::vector<double> qb;
            for (double k : kinks) {
                qb.push_back(std::exp(-alpha * k));
                if (k > u) qb.push_back(std::exp(-alpha * (k - u)));
            }
            return integrate(
                [&](double q) {
                    double v = -std::log(std::max(q, 1e-300)) / alpha;
                    return J(u) * J(v) / J(u + v);
                },
                0.0, 1.0, quad_in, qb);
        };
        return clamp01(integrate_exp_weight(inner, alpha, quad_in.tightened(10.0), kinks));
    }

    // K(t) = int alpha e^{-alpha x} J(x) J(t) / J(x+t) dx
    double K_raw(double t) const {
        if (kappa == 0) return 1.0;
        if (t >= k_top) return jw;
        std::vector<double> xb = kinks;
        for (double k : kinks)
            if (k > t) xb.push_back(k - t);
        double jt = J(t);
        return integrate_exp_weight([&](double x) { return J(x) * jt / J(x + t); }, alpha,
                                    quad_in, xb);
    }

    double K(double t) const {
        if (kappa == 0) return 1.0;
        if (t >= k_top) return jw;
        return (*ktab)(t);
    }

    // convolution C(w) = alpha int_0^w K(t) K(w-t) dt, computed on the half range
    double conv(double w) const {
        if (w <= 0) return 0.0;
        std::vector<double> cuts;
        for (double k : kinks) {
            if (k < 0.5 * w) cuts.push_back(k);
            if (w - k > 0 && w - k < 0.5 * w) cuts.push_back(w - k);
        }
        double half = integrate([&](double t) { return K(t) * K(w - t); }, 0.0, 0.5 * w,
                                quad_in, cuts);
        return 2.0 * alpha * half;
    }

    // exactly-one-anchor component before the shared-clone normalization
    double r1_raw(double w) const {
        double key = bits_key(w);
        {
            std::lock_guard<std::mutex> lock(mu);
            auto it = memo_r1.find(key);
            if (it != memo_r1.end()) return it->second;
        }
        double v = std::exp(-alpha * w) * conv(w);
        std::lock_guard<std::mutex> lock(mu);
        memo_r1.emplace(key, v);
        return v;
    }

    // closed-form tail of alpha int r1_raw once K is flat: C(w) = a w + b there
    double r1_tail_integral(double z) const {
        double start = std::max(z, 2.0 * k_top);
        double numeric = 0;
        if (z < start)
            numeric = alpha * integrate([&](double w) { return r1_raw(w); }, z, start,
                                        quad_in, tail_cuts(z, start));
        double ik = 0;  // int_0^{k_top} K
        if (kappa > 0 && k_top > 0)
            ik = integrate([&](double t) { return K(t); }, 0.0, k_top, quad_in, kinks);
        // C(w) = 2 alpha jw (ik + (w/2 - k_top) jw) for w >= 2 k_top: linear in w
        double slope = alpha * jw * jw;
        double intercept = 2.0 * alpha * jw * ik - 2.0 * alpha * jw * jw * k_top;
        double s = start;
        double es = std::exp(-alpha * s);
        // alpha * int_s^inf e^{-alpha w} (slope w + intercept) dw
        double tail = es * (slope * (s + 1.0 / alpha) + intercept);
        return numeric + tail;
    }

    std::vector<double> tail_cuts(double lo, double hi) const {
        std::vector<double> cuts;
        for (double k : kinks)
            for (int m = 1; m <= 2; ++m)
                if (m * k > lo && m * k < hi) cuts.push_back(m * k);
        if (std::isfinite(ell_sup)) {
            for (double v : {ell_sup, 2.0 * ell_sup})
                if (v > lo && v < hi) cuts.push_back(v);
        }
        return cuts;
    }

    void normalize_r2() {
        r2_total_raw = r1_tail_integral(0.0);
        if (rho > 0 && r2_total_raw > 0) {
            double scale = rho * rho / r2_total_raw;
            if (std::abs(scale - 1.0) > 1e-5)
                throw NumericError("TwoPointAnalysis: pattern decomposition inconsistent",
                                   std::abs(scale - 1.0));
            r2_norm = scale;
        }
    }

    // two-or-more component before normalization, complement form
    double r2d(double z) const {
        if (kappa == 0) {
            return 1.0 - (1.0 + alpha * z) * std::exp(-alpha * z);
        }
        double key = bits_key(z);
        {
            std::lock_guard<std::mutex> lock(mu);
            auto it = memo_r2d.find(key);
            if (it != memo_r2d.end()) return it->second;
        }
        double v = r2_norm * (r2_total_raw - r1_tail_integral(z));
        v = std::max(v, 0.0);
        std::lock_guard<std::mutex> lock(mu);
        memo_r2d.emplace(key, v);
        return v;
    }

    double rbar0(double z) const {
        if (z >= ell_sup || kappa == 0 || z >= k_top)
            return std::exp(-alpha * z) * jw * jw;
        double key = bits_key(z);
        {
            std::lock_guard<std::mutex> lock(mu);
            auto it = memo_rbar0.find(key);
            if (it != memo_rbar0.end()) return it->second;
        }
        auto inner = [&](double x) {
            std::vector<double> qb;
            for (double k : kinks) {
                qb.push_back(std::exp(-alpha * k));
                double rest = k - x - z;
                if (rest > 0) qb.push_back(std::exp(-alpha * rest));
            }
            double jx = J(x);
            return integrate(
                [&](double q) {
                    double y = -std::log(std::max(q, 1e-300)) / alpha;
                    return jx * J(y) / J(x + y + z);
                },
                0.0, 1.0, quad_in, qb);
        };
        std::vector<double> xb = kinks;
        for (double k : kinks)
            if (k > z) xb.push_back(k - z);
        double v = std::exp(-alpha * z) *
                   integrate_exp_weight(inner, alpha, quad_in.tightened(10.0), xb);
        std::lock_guard<std::mutex> lock(mu);
        memo_rbar0.emplace(key, v);
        return v;
    }

    // covariance kernel f(z) = r(0,z) - rho^2; exact zero beyond the cut
    double f(double z) const {
        if (z >= z_cut) return 0.0;
        double key = bits_key(z);
        {
            std::lock_guard<std::mutex> lock(mu);
            auto it = memo_f.find(key);
            if (it != memo_f.end()) return it->second;
        }
        // clones spanning both points are shared by the two coverage events;
        // dividing the one-anchor-or-more part by J(z) removes the double count
        double v = rbar0(z) - rho * rho + (r1_raw(z) + r2d(z)) / J(z);
        std::lock_guard<std::mutex> lock(mu);
        memo_f.emplace(key, v);
        return v;
    }

    double variance(double G) const {
        if (!(G >= 0)) throw std::invalid_argument("variance: G must be >= 0");
        if (G == 0) return 0.0;
        double hi = std::min(G, z_cut);
        if (hi <= 0) return 0.0;
        return 2.0 * integrate([&](double z) { return (G - z) * f(z); }, 0.0, hi, quad,
                               tail_cuts(0.0, hi));
    }

    VarianceConstants constants() const {
        VarianceConstants vc;
        // envelopes decay like (1 + alpha z) e^{-alpha z}; integrate out to where
        // the weighted tail is below tail_mass
        double lift = std::exp(kappa * me(0)) * (jw * jw + 1.0);
        double zb = z_cut;
        while (lift * (2.0 + alpha * zb) * (2.0 + alpha * zb) * std::exp(-alpha * zb) >
                   quad.tail_mass &&
               zb < 1e6)
            zb += 1.0 / alpha;
        auto comp = [&](auto g) {
            return 2.0 * integrate(g, 0.0, zb, quad, tail_cuts(0.0, zb));
        };
        auto b0 = [&](double z) { return rbar0(z); };
        auto b1 = [&](double z) { return r1_raw(z) / J(z); };
        auto b3 = [&](double z) { return rho * rho - r2d(z) / J(z); };
        vc.nu0 = comp(b0);
        vc.nu1 = comp(b1);
        vc.nu3 = comp(b3);
        vc.lambda0 = comp([&](double z) { return z * b0(z); });
        vc.lambda1 = comp([&](double z) { return z * b1(z); });
        vc.lambda3 = comp([&](double z) { return z * b3(z); });
        bool degenerate = kappa == 0 || params.lengths.support_top() == 0;
        if (!degenerate && !(vc.nu() > 0))
            throw NumericError("variance_constants: nu must be positive for nondegenerate models");
        return vc;
    }

    TwoPointDecomposition decompose(double gap) const {
        TwoPointDecomposition d;
        double jz = J(gap);
        d.r0 = rbar0(gap);
        d.r1 = r1_raw(gap) / jz;
        d.r2 = r2d(gap) / jz;
        d.r3 = rho * rho - d.r2;
        d.total = gap >= z_cut ? rho * rho : d.r0 + d.r1 + d.r2;
        return d;
    }
};

TwoPointAnalysis::TwoPointAnalysis(HomogeneousParams params, QuadConfig quad)
    : impl_(std::make_unique<Impl>(std::move(params), quad)) {}
TwoPointAnalysis::~TwoPointAnalysis() = default;

double TwoPointAnalysis::rho() const { return impl_->rho; }
double TwoPointAnalysis::j_weighted() const { return impl_->jw; }
double TwoPointAnalysis::pair_covariance(double z) const { return impl_->f(z); }
double TwoPointAnalysis::variance(double G) const { return impl_->variance(G); }
double TwoPointAnalysis::support_cut() const { return impl_->z_cut; }
VarianceConstants TwoPointAnalysis::constants() const { return impl_->constants(); }
const HomogeneousParams& TwoPointAnalysis::params() const { return impl_->params; }

TwoPointDecomposition TwoPointAnalysis::decompose(double gap) const {
    if (gap < 0) throw std::invalid_argument("decompose: gap must be >= 0");
    return impl_->decompose(gap);
}

double TwoPointAnalysis::rbar(int i, double z) const {
    if (z < 0) throw std::invalid_argument("rbar: z must be >= 0");
    switch (i) {
        case 0:
            return impl_->rbar0(z);
        case 1:
            return impl_->r1_raw(z) / impl_->J(z);
        case 3:
            return impl_->rho * impl_->rho - impl_->r2d(z) / impl_->J(z);
        default:
            throw std::invalid_argument("rbar: component must be 0, 1 or 3");
    }
}

// ----------------------------------------------------------- analysis cache

namespace {

std::string fingerprint(const HomogeneousParams& p, const QuadConfig& q) {
    std::ostringstream os;
    os.precision(17);
    os << p.kappa << '|' << p.alpha << '|' << static_cast<int>(p.lengths.kind()) << '|'
       << p.lengths.param1() << '|' << p.lengths.param2();
    for (auto& [v, pr] : p.lengths.atom_list()) os << '|' << v << ':' << pr;
    os << '#' << q.abs_tol << '|' << q.rel_tol << '|' << q.tail_mass << '|' << q.max_subdiv;
    return os.str();
}

std::mutex g_cache_mu;
std::map<std::string, std::shared_ptr<TwoPointAnalysis>> g_cache;

}  // namespace

std::shared_ptr<TwoPointAnalysis> two_point_analysis(const HomogeneousParams& params,
                                                     const QuadConfig& quad) {
    std::string key = fingerprint(params, quad);
    std::lock_guard<std::mutex> lock(g_cache_mu);
    auto it = g_cache.find(key);
    if (it != g_cache.end()) return it->second;
    auto analysis = std::make_shared<TwoPointAnalysis>(params, quad);
    g_cache.emplace(std::move(key), analysis);
    return analysis;
}

double rho_hom(const HomogeneousParams& params, const QuadConfig& quad) {
    return two_point_analysis(params, quad)->rho();
}

double j_weighted(const HomogeneousParams& params, const QuadConfig& quad) {
    return two_point_analysis(params, quad)->j_weighted();
}

double rbar(const HomogeneousParams& params, double z, int i, const QuadConfig& quad) {
    return two_point_analysis(params, quad)->rbar(i, z);
}

double pair_covariance(const HomogeneousParams& params, double z, const QuadConfig& quad) {
    return two_point_analysis(params, quad)->pair_covariance(z);
}

VarianceConstants variance_constants(const HomogeneousParams& params, const QuadConfig& quad) {
    return two_point_analysis(params, quad)->constants();
}

double variance_exact(const HomogeneousParams& params, double G, const QuadConfig& quad) {
    return two_point_analysis(params, quad)->variance(G);
}

double tau_bound(const HomogeneousParams& params, double G) {
    if (!(G >= 0)) throw std::invalid_argument("tau_bound: G must be >= 0");
    double a = params.alpha;
    return 2.0 / (a * a) * (3.0 + a * G) * std::exp(-a * G);
}

double phi(double x) {
    if (x < 0) throw std::invalid_argument("phi: x must be >= 0");
    if (x < 1e-4) {
        // series: x^3/3 - x^4/8 + ...
        return x * x * x / 3.0 - x * x * x * x / 8.0;
    }
    return x - 1.0 + std::exp(-x) * (1.0 - 0.5 * x * x);
}

double nu_vanishing(const HomogeneousParams& params, const QuadConfig& quad) {
    double a = params.alpha;
    double v = params.kappa / (a * a) *
               params.lengths.expect([&](double l) { return phi(a * l); }, quad);
    if (v < 0) throw NumericError("nu_vanishing: negative value");
    return v;
}

LimitAsymptotics limit_asymptotics(const HomogeneousParams& params, const QuadConfig& quad) {
    double a = params.alpha, k = params.kappa;
    LimitAsymptotics out;
    out.nu_smallL3 = a * k * params.lengths.moment3() / 3.0;
    out.ocean_deficit_smallKappa =
        k * params.lengths.expect([&](double l) { return l * std::exp(-a * l); }, quad);
    out.ocean_deficit_smallL = k * params.lengths.mean();
    return out;
}

double mixing_bound(const HomogeneousParams& params, double n, const QuadConfig&) {
    if (n < 0) throw std::invalid_argument("mixing_bound: n must be >= 0");
    double tail = params.kappa * params.lengths.mean_excess(n);
    double jn = params.kappa == 0 ? 1.0 : std::exp(-tail);
    return std::min(1.0 - jn, tail);
}

MixingSummability mixing_bound_sum(const HomogeneousParams& params, const QuadConfig& quad) {
    MixingSummability out;
    out.summable = std::isfinite(params.lengths.moment2());
    if (!out.summable) return out;
    double sum = 0;
    for (int n = 0; n < 1000000; ++n) {
        double b = mixing_bound(params, n, quad);
        sum += b;
        if (b < 1e-16 && n > 1) break;
    }
    out.sum = sum;
    return out;
}

InhomogeneousBounds inhomogeneous_bounds(const UniformBandParams& band, const QuadConfig& quad) {
    if (!(band.kappa_lo > 0 && band.kappa_lo <= band.kappa_hi))
        throw std::invalid_argument("inhomogeneous_bounds: need 0 < kappa_lo <= kappa_hi");
    if (!(band.alpha_lo > 0 && band.alpha_lo <= band.alpha_hi))
        throw std::invalid_argument("inhomogeneous_bounds: need 0 < alpha_lo <= alpha_hi");
    if (!(band.length_lo.support_top() > 0))
        throw std::invalid_argument("inhomogeneous_bounds: lower length bound is a.s. zero");
    InhomogeneousBounds out;
    out.rho_minus = rho_hom({band.kappa_hi, band.alpha_hi, band.length_hi}, quad);
    out.rho_plus = rho_hom({band.kappa_lo, band.alpha_lo, band.length_lo}, quad);
    out.nu_plus = 4.0 / band.alpha_lo;
    // canonical halving of the short-range covariance floor
    double floor_height = (1.0 - out.rho_plus) * out.rho_minus;
    out.nu_minus = floor_height * floor_height / (4.0 * band.kappa_hi);
    return out;
}

// --------------------------------------------------------- general two-point

namespace {

// Kernel tables for one ordered pair (z, z') of an inhomogeneous spec.
struct PairKernels {
    const ModelSpec& spec;
    QuadConfig quad;
    AnchorSideMap left_of_z;    // x, leftward from z
    AnchorSideMap right_of_zp;  // y, rightward from z'
    AnchorSideMap right_of_z;   // s, rightward from z  (for the >=2 pattern)
    AnchorSideMap left_of_zp;   // t, leftward from z'
    double z, zp;

    PairKernels(const ModelSpec& s, double z_, double zp_, QuadConfig q)
        : spec(s),
          quad(q),
          left_of_z{&s.anchors, z_, true, q},
          right_of_zp{&s.anchors, zp_, false, q},
          right_of_z{&s.anchors, z_, false, q},
          left_of_zp{&s.anchors, zp_, true, q},
          z(z_),
          zp(zp_) {}

    // int over x of J(x|z|s) dp  (s may be open)
    double kl(std::optional<double> s) const {
        double jzs = J_open(spec, z, s, quad);
        return integrate(
            [&](double p) {
                auto x = left_of_z.position(p);
                return clamp01(J_open(spec, x, z, quad) * jzs / J_open(spec, x, s, quad));
            },
            0.0, 1.0, quad);
    }

    // int over y of J(t|z'|y) dq  (t may be open)
    double kr(std::optional<double> t) const {
        double jtz = J_open(spec, t, zp, quad);
        return integrate(
            [&](double q) {
                auto y = right_of_zp.position(q);
                return clamp01(jtz * J_open(spec, zp, y, quad) / J_open(spec, t, y, quad));
            },
            0.0, 1.0, quad);
    }
};

}  // namespace

TwoPointDecomposition r_two_point(const ModelSpec& spec, double z, double zp,
                                  const QuadConfig& quad) {
    if (z > zp) std::swap(z, zp);

    if (spec.homogeneous()) {
        auto analysis = two_point_analysis(as_homogeneous(spec), quad);
        return analysis->decompose(zp - z);
    }

    QuadConfig inner = quad.tightened(1e-2);
    PairKernels pk(spec, z, zp, inner);
    double jzz = J_general(spec, z, zp, inner);
    double azz = A_gap(spec, z, zp, inner);

    // no anchor strictly between
    auto r0_outer = [&](double p) {
        auto x = pk.left_of_z.position(p);
        double jxz = J_open(spec, x, z, inner);
        return integrate(
            [&](double q) {
                auto y = pk.right_of_zp.position(q);
                return clamp01(jxz * J_open(spec, zp, y, inner) / J_open(spec, x, y, inner));
            },
            0.0, 1.0, inner);
    };
    double r0 = azz * integrate(r0_outer, 0.0, 1.0, inner.tightened(10.0));

    // one-sided kernels tabulated over the gap; table cuts where the clone
    // intensity, anchor intensity, or length-law pieces introduce kinks
    double r1d = 0.0;
    double r2d = 0.0;
    if (!spec.anchors.is_zero() && zp > z) {
        std::vector<double> kernel_cuts;
        auto add_cut = [&](double c) {
            if (c > z && c < zp) kernel_cuts.push_back(c);
        };
        for (double b : spec.clones.breakpoints()) add_cut(b);
        for (double b : spec.anchors.breakpoints()) add_cut(b);
        for (double b : spec.lengths.breakpoints()) add_cut(b);
        for (auto& law : spec.lengths.laws())
            for (double k : law_kinks(law)) {
                add_cut(z + k);
                add_cut(zp - k);
            }
        SegmentedTable kl_tab([&](double s) { return pk.kl(s); }, z, zp, kernel_cuts, 129);
        SegmentedTable kr_tab([&](double t) { return pk.kr(t); }, z, zp, kernel_cuts, 129);

        // exactly one anchor between: both kernels share the anchor
        std::vector<double> cuts;
        for (double b : spec.anchors.breakpoints())
            if (b > z && b < zp) cuts.push_back(b);
        r1d = azz * integrate(
                        [&](double s) {
                            return spec.anchors.rate_at(s) * kl_tab(s) * kr_tab(s);
                        },
                        z, zp, inner.tightened(10.0), cuts);

        // two or more: s in [z, z'], t in [s, z']
        auto outer = [&](double ps) {
            auto s = pk.right_of_z.position(ps);
            if (!s || *s > zp) return 0.0;
            double q_lo = std::exp(-spec.anchors.measure(*s, zp, inner));
            if (q_lo >= 1.0) return 0.0;
            double inner_val = integrate(
                [&](double qt) {
                    auto t = pk.left_of_zp.position(qt);
                    if (!t || *t < *s) return 0.0;
                    return kr_tab(*t);
                },
                q_lo, 1.0, inner);
            return kl_tab(*s) * inner_val;
        };
        if (azz < 1.0) r2d = integrate(outer, azz, 1.0, inner.tightened(10.0));
    }

    double rz = r_one_point(spec, z, quad);
    double rzp = r_one_point(spec, zp, quad);

    TwoPointDecomposition d;
    d.r0 = clamp01(r0);
    d.r1 = r1d / jzz;
    d.r2 = r2d / jzz;
    d.r3 = rz * rzp - d.r2;
    d.total = d.r0 + d.r1 + d.r2;
    if (d.r3 < -10.0 * quad.abs_tol)
        throw NumericError("r_two_point: negative complement component", -d.r3);
    return d;
}

// ----------------------------------------------------------- third moment

namespace {

constexpr int kHaltonBases[9] = {2, 3, 5, 7, 11, 13, 17, 19, 23};

double radical_inverse(std::uint64_t n, int base) {
    double inv = 1.0 / base, value = 0.0, factor = inv;
    while (n > 0) {
        value += static_cast<double>(n % base) * factor;
        n /= base;
        factor *= inv;
    }
    return value;
}

struct TripleEvaluator {
    const HomogeneousParams& p;
    double alpha;

    double J(double u) const {
        return p.kappa == 0 ? 1.0 : std::exp(-p.kappa * p.lengths.mean_excess(std::max(u, 0.0)));
    }

    // sum over the 9 gap patterns of the conditional no-anchored-cover
    // probability times the pattern weight
    double operator()(const double z[3], const double u[6]) const {
        double x = z[0] + std::log(std::max(u[0], 1e-300)) / alpha;
        double y = z[2] - std::log(std::max(u[1], 1e-300)) / alpha;
        double total = 0.0;
        for (int i1 = 0; i1 <= 2; ++i1) {
            for (int i2 = 0; i2 <= 2; ++i2) {
                int idx[2] = {i1, i2};
                double weight = 1.0, correction = 1.0;
                // gl / gr: right guard of the block left of gap k and left
                // guard of the block right of it
                double gl[2] = {0, 0}, gr[2] = {0, 0};
                bool merged[2];
                for (int k = 0; k < 2; ++k) {
                    double d = z[k + 1] - z[k];
                    const double* g = u + 2 + 2 * k;
                    switch (idx[k]) {
                        case 0:
                            weight *= std::exp(-alpha * d);
                            merged[k] = true;
                            break;
                        case 1: {
                            double s = z[k] + d * g[0];
                            weight *= alpha * d * std::exp(-alpha * d);
                            gl[k] = s;
                            gr[k] = s;
                            merged[k] = false;
                            correction /= J(d);
                            break;
                        }
                        case 2: {
                            double s = z[k] + d * std::min(g[0], g[1]);
                            double t = z[k] + d * std::max(g[0], g[1]);
                            weight *= 0.5 * alpha * alpha * d * d *
                                      std::exp(-alpha * ((s - z[k]) + (z[k + 1] - t)));
                            gl[k] = s;
                            gr[k] = t;
                            merged[k] = false;
                            correction /= J(d);
                            break;
                        }
                    }
                }
                // assemble blocks: runs of points joined by merged gaps
                double jprod = 1.0;
                double block_lo = z[0], left_guard = x;
                for (int k = 0; k < 2; ++k) {
                    if (merged[k]) continue;
                    double block_hi = z[k];
                    jprod *= J(block_lo - left_guard) * J(gl[k] - block_hi) /
                             J(gl[k] - left_guard);
                    left_guard = gr[k];
                    block_lo = z[k + 1];
                }
                jprod *= J(block_lo - left_guard) * J(y - z[2]) / J(y - left_guard);
                total += weight * jprod * correction;
            }
        }
        return total;
    }
};

}  // namespace

ThirdMomentResult third_moment(const HomogeneousParams& params, double G, const QuadConfig&,
                               std::uint64_t seed, int points, int replicates,
                               double tolerance) {
    if (!(G > 0)) throw std::invalid_argument("third_moment: G must be > 0");
    ThirdMomentResult out;
    if (params.kappa == 0 || params.alpha == 0 || params.lengths.support_top() == 0) {
        out.value = G * G * G;
        out.stderr_ = 0;
        return out;
    }
    TripleEvaluator ev{params, params.alpha};
    std::vector<double> rep_means(replicates);
    for (int r = 0; r < replicates; ++r) {
        RngStream rng(seed, static_cast<std::uint64_t>(r));
        double shift[9];
        for (double& s : shift) s = rng.uniform();
        double acc = 0.0;
        for (int n = 1; n <= points; ++n) {
            double pt[9];
            for (int d = 0; d < 9; ++d) {
                double v = radical_inverse(static_cast<std::uint64_t>(n), kHaltonBases[d]) +
                           shift[d];
                pt[d] = v - std::floor(v);
            }
            double zs[3] = {G * pt[0], G * pt[1], G * pt[2]};
            std::sort(zs, zs + 3);
            acc += ev(zs, pt + 3);
        }
        rep_means[r] = G * G * G * acc / points;
    }
    double mean = 0;
    for (double m : rep_means) mean += m;
    mean /= replicates;
    double var = 0;
    for (double m : rep_means) var += (m - mean) * (m - mean);
    var /= replicates > 1 ? (replicates - 1) : 1;
    out.value = mean;
    out.stderr_ = std::sqrt(var / replicates);
    out.converged = out.stderr_ <= tolerance;
    return out;
}

}  // namespace ancov
