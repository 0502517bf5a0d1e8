#include "ancov/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ancov {

// ---------------------------------------------------------------- intensity

IntensityMeasure IntensityMeasure::constant(double rate) {
    if (!(rate >= 0)) throw std::invalid_argument("IntensityMeasure: rate must be >= 0");
    IntensityMeasure m;
    m.kind_ = Kind::Constant;
    m.rates_ = {rate};
    m.sup_rate_ = rate;
    return m;
}

IntensityMeasure IntensityMeasure::piecewise(std::vector<double> breakpoints,
                                             std::vector<double> rates) {
    if (breakpoints.empty() || rates.size() != breakpoints.size() + 1)
        throw std::invalid_argument("IntensityMeasure: need n breakpoints and n+1 rates");
    if (!std::is_sorted(breakpoints.begin(), breakpoints.end()))
        throw std::invalid_argument("IntensityMeasure: breakpoints must be sorted");
    for (double r : rates)
        if (!(r >= 0)) throw std::invalid_argument("IntensityMeasure: rates must be >= 0");
    IntensityMeasure m;
    m.kind_ = Kind::PiecewiseConstant;
    m.breaks_ = std::move(breakpoints);
    m.rates_ = std::move(rates);
    m.sup_rate_ = *std::max_element(m.rates_.begin(), m.rates_.end());
    return m;
}

IntensityMeasure IntensityMeasure::density(std::function<double(double)> f, double bound,
                                           double audit_lo, double audit_hi) {
    if (!(bound > 0) || !std::isfinite(bound))
        throw std::invalid_argument("IntensityMeasure: density bound must be finite positive");
    // audit the declared bound on a grid; rejects obviously wrong bounds early
    const int n = 1024;
    for (int i = 0; i <= n; ++i) {
        double x = audit_lo + (audit_hi - audit_lo) * i / n;
        double v = f(x);
        if (!(v >= 0) || v > bound * (1 + 1e-12))
            throw std::invalid_argument("IntensityMeasure: density violates [0, bound] on audit grid");
    }
    IntensityMeasure m;
    m.kind_ = Kind::Density;
    m.f_ = std::move(f);
    m.sup_rate_ = bound;
    return m;
}

double IntensityMeasure::rate_at(double x) const {
    switch (kind_) {
        case Kind::Constant:
            return rates_[0];
        case Kind::PiecewiseConstant: {
            auto it = std::upper_bound(breaks_.begin(), breaks_.end(), x);
            return rates_[static_cast<size_t>(it - breaks_.begin())];
        }
        case Kind::Density:
            return f_(x);
    }
    return 0.0;
}

double IntensityMeasure::measure(double lo, double hi, const QuadConfig& quad) const {
    if (lo > hi) throw std::invalid_argument("measure: reversed interval");
    if (lo == hi) return 0.0;
    switch (kind_) {
        case Kind::Constant:
            return rates_[0] * (hi - lo);
        case Kind::PiecewiseConstant: {
            double total = 0.0, cur = lo;
            for (size_t i = 0; i < breaks_.size() && cur < hi; ++i) {
                if (breaks_[i] <= cur) continue;
                double seg_hi = std::min(breaks_[i], hi);
                total += rates_[i] * (seg_hi - cur);
                cur = seg_hi;
            }
            if (cur < hi) total += rates_.back() * (hi - cur);
            return total;
        }
        case Kind::Density:
            return integrate(f_, lo, hi, quad);
    }
    return 0.0;
}

std::optional<double> IntensityMeasure::invert_mass_right(double z, double mass,
                                                          const QuadConfig& quad) const {
    if (mass <= 0) return z;
    switch (kind_) {
        case Kind::Constant:
            if (rates_[0] == 0) return std::nullopt;
            return z + mass / rates_[0];
        case Kind::PiecewiseConstant: {
            double cur = z, remaining = mass;
            for (size_t i = 0; i < breaks_.size(); ++i) {
                if (breaks_[i] <= cur) continue;
                double seg = rates_[i] * (breaks_[i] - cur);
                if (seg >= remaining) return cur + remaining / rates_[i];
                remaining -= seg;
                cur = breaks_[i];
            }
            if (rates_.back() == 0) return std::nullopt;
            return cur + remaining / rates_.back();
        }
        case Kind::Density: {
            // expanding bracket + bisection on the cumulative
            double step = 1.0, hi = z;
            double acc = 0.0;
            for (int i = 0; i < 128; ++i) {
                double nxt = hi + step;
                acc += measure(hi, nxt, quad);
                hi = nxt;
                if (acc >= mass) break;
                step *= 2.0;
                if (step > 1e12) return std::nullopt;
            }
            if (acc < mass) return std::nullopt;
            double lo = z;
            for (int it = 0; it < 200 && hi - lo > 1e-13 * (1 + std::abs(hi)); ++it) {
                double mid = 0.5 * (lo + hi);
                (measure(z, mid, quad) < mass ? lo : hi) = mid;
            }
            return 0.5 * (lo + hi);
        }
    }
    return std::nullopt;
}

std::optional<double> IntensityMeasure::invert_mass_left(double z, double mass,
                                                         const QuadConfig& quad) const {
    if (mass <= 0) return z;
    switch (kind_) {
        case Kind::Constant:
            if (rates_[0] == 0) return std::nullopt;
            return z - mass / rates_[0];
        case Kind::PiecewiseConstant: {
            double cur = z, remaining = mass;
            for (size_t i = breaks_.size(); i-- > 0;) {
                if (breaks_[i] >= cur) continue;
                double seg = rates_[i + 1] * (cur - breaks_[i]);
                if (seg >= remaining) return cur - remaining / rates_[i + 1];
                remaining -= seg;
                cur = breaks_[i];
            }
            if (rates_.front() == 0) return std::nullopt;
            return cur - remaining / rates_.front();
        }
        case Kind::Density: {
            double step = 1.0, lo = z, acc = 0.0;
            for (int i = 0; i < 128; ++i) {
                double nxt = lo - step;
                acc += measure(nxt, lo, quad);
                lo = nxt;
                if (acc >= mass) break;
                step *= 2.0;
                if (step > 1e12) return std::nullopt;
            }
            if (acc < mass) return std::nullopt;
            double hi = z;
            for (int it = 0; it < 200 && hi - lo > 1e-13 * (1 + std::abs(hi)); ++it) {
                double mid = 0.5 * (lo + hi);
                (measure(mid, z, quad) < mass ? hi : lo) = mid;
            }
            return 0.5 * (lo + hi);
        }
    }
    return std::nullopt;
}

double IntensityMeasure::constant_rate() const {
    if (kind_ != Kind::Constant)
        throw std::logic_error("constant_rate: intensity is not constant");
    return rates_[0];
}

// ---------------------------------------------------------------- length law

LengthLaw LengthLaw::deterministic(double value) {
    if (!(value >= 0)) throw std::invalid_argument("LengthLaw: length must be >= 0");
    LengthLaw l;
    l.kind_ = Kind::Deterministic;
    l.p1_ = value;
    l.atoms_ = {{value, 1.0}};
    return l;
}

LengthLaw LengthLaw::exponential(double mean) {
    if (!(mean > 0)) throw std::invalid_argument("LengthLaw: exponential mean must be > 0");
    LengthLaw l;
    l.kind_ = Kind::Exponential;
    l.p1_ = mean;
    return l;
}

LengthLaw LengthLaw::uniform(double a, double b) {
    if (!(a >= 0) || !(b > a)) throw std::invalid_argument("LengthLaw: need 0 <= a < b");
    LengthLaw l;
    l.kind_ = Kind::UniformInterval;
    l.p1_ = a;
    l.p2_ = b;
    return l;
}

LengthLaw LengthLaw::atoms(std::vector<double> values, std::vector<double> probabilities) {
    if (values.empty() || values.size() != probabilities.size())
        throw std::invalid_argument("LengthLaw: atoms need matching values/probabilities");
    double tot = 0;
    for (size_t i = 0; i < values.size(); ++i) {
        if (!(values[i] >= 0)) throw std::invalid_argument("LengthLaw: atom values must be >= 0");
        if (!(probabilities[i] >= 0))
            throw std::invalid_argument("LengthLaw: atom probabilities must be >= 0");
        tot += probabilities[i];
    }
    if (std::abs(tot - 1.0) > 1e-9)
        throw std::invalid_argument("LengthLaw: atom probabilities must sum to 1");
    LengthLaw l;
    l.kind_ = Kind::DiscreteAtoms;
    l.atoms_.resize(values.size());
    for (size_t i = 0; i < values.size(); ++i) l.atoms_[i] = {values[i], probabilities[i]};
    std::sort(l.atoms_.begin(), l.atoms_.end());
    return l;
}

double LengthLaw::survival(double t) const {
    if (t < 0) throw std::invalid_argument("survival: t must be >= 0");
    switch (kind_) {
        case Kind::Deterministic:
            return t <= p1_ ? 1.0 : 0.0;
        case Kind::Exponential:
            return std::exp(-t / p1_);
        case Kind::UniformInterval:
            if (t <= p1_) return 1.0;
            if (t >= p2_) return 0.0;
            return (p2_ - t) / (p2_ - p1_);
        case Kind::DiscreteAtoms: {
            double s = 0;
            for (auto& [v, p] : atoms_)
                if (v >= t) s += p;
            return s;
        }
    }
    return 0.0;
}

double LengthLaw::quantile(double p) const {
    if (!(p >= 0 && p <= 1)) throw std::invalid_argument("quantile: p must be in [0,1]");
    switch (kind_) {
        case Kind::Deterministic:
            return p1_;
        case Kind::Exponential:
            if (p >= 1.0) return kInf;
            return -p1_ * std::log1p(-p);
        case Kind::UniformInterval:
            return p1_ + p * (p2_ - p1_);
        case Kind::DiscreteAtoms: {
            double cum = 0;
            for (auto& [v, q] : atoms_) {
                cum += q;
                if (cum >= p - 1e-15) return v;
            }
            return atoms_.back().first;
        }
    }
    return 0.0;
}

double LengthLaw::mean_excess(double u) const {
    if (u <= 0) return mean() - u;
    switch (kind_) {
        case Kind::Deterministic:
            return std::max(p1_ - u, 0.0);
        case Kind::Exponential:
            return p1_ * std::exp(-u / p1_);
        case Kind::UniformInterval:
            if (u <= p1_) return 0.5 * (p1_ + p2_) - u;
            if (u >= p2_) return 0.0;
            return (p2_ - u) * (p2_ - u) / (2.0 * (p2_ - p1_));
        case Kind::DiscreteAtoms: {
            double s = 0;
            for (auto& [v, p] : atoms_)
                if (v > u) s += p * (v - u);
            return s;
        }
    }
    return 0.0;
}

double LengthLaw::density(double t) const {
    switch (kind_) {
        case Kind::Exponential:
            return t >= 0 ? std::exp(-t / p1_) / p1_ : 0.0;
        case Kind::UniformInterval:
            return (t >= p1_ && t <= p2_) ? 1.0 / (p2_ - p1_) : 0.0;
        default:
            return 0.0;
    }
}

double LengthLaw::mean() const {
    switch (kind_) {
        case Kind::Deterministic:
            return p1_;
        case Kind::Exponential:
            return p1_;
        case Kind::UniformInterval:
            return 0.5 * (p1_ + p2_);
        case Kind::DiscreteAtoms: {
            double s = 0;
            for (auto& [v, p] : atoms_) s += p * v;
            return s;
        }
    }
    return 0.0;
}

double LengthLaw::moment2() const {
    switch (kind_) {
        case Kind::Deterministic:
            return p1_ * p1_;
        case Kind::Exponential:
            return 2.0 * p1_ * p1_;
        case Kind::UniformInterval:
            return (p1_ * p1_ + p1_ * p2_ + p2_ * p2_) / 3.0;
        case Kind::DiscreteAtoms: {
            double s = 0;
            for (auto& [v, p] : atoms_) s += p * v * v;
            return s;
        }
    }
    return 0.0;
}

double LengthLaw::moment3() const {
    switch (kind_) {
        case Kind::Deterministic:
            return p1_ * p1_ * p1_;
        case Kind::Exponential:
            return 6.0 * p1_ * p1_ * p1_;
        case Kind::UniformInterval: {
            double a = p1_, b = p2_;
            return (a * a * a + a * a * b + a * b * b + b * b * b) / 4.0;
        }
        case Kind::DiscreteAtoms: {
            double s = 0;
            for (auto& [v, p] : atoms_) s += p * v * v * v;
            return s;
        }
    }
    return 0.0;
}

double LengthLaw::support_top() const {
    switch (kind_) {
        case Kind::Deterministic:
            return p1_;
        case Kind::Exponential:
            return kInf;
        case Kind::UniformInterval:
            return p2_;
        case Kind::DiscreteAtoms:
            return atoms_.back().first;
    }
    return 0.0;
}

double LengthLaw::expect(const std::function<double(double)>& g, const QuadConfig& quad) const {
    if (is_discrete()) {
        double s = 0;
        for (auto& [v, p] : atoms_) s += p * g(v);
        return s;
    }
    if (kind_ == Kind::UniformInterval)
        return integrate([&](double t) { return g(t) * density(t); }, p1_, p2_, quad);
    // exponential: unit-mass exponential weight directly
    return integrate_exp_weight(g, 1.0 / p1_, quad);
}

// --------------------------------------------------------- positional lengths

PositionLengthMap::PositionLengthMap(LengthLaw everywhere) { laws_.push_back(std::move(everywhere)); }

PositionLengthMap::PositionLengthMap(std::vector<double> breakpoints, std::vector<LengthLaw> laws)
    : breaks_(std::move(breakpoints)), laws_(std::move(laws)) {
    if (laws_.size() != breaks_.size() + 1)
        throw std::invalid_argument("PositionLengthMap: need n breakpoints and n+1 laws");
    if (!std::is_sorted(breaks_.begin(), breaks_.end()))
        throw std::invalid_argument("PositionLengthMap: breakpoints must be sorted");
}

const LengthLaw& PositionLengthMap::at(double x) const {
    if (laws_.size() == 1) return laws_[0];
    auto it = std::upper_bound(breaks_.begin(), breaks_.end(), x);
    return laws_[static_cast<size_t>(it - breaks_.begin())];
}

double PositionLengthMap::quantile_sup(double p) const {
    double q = 0;
    for (auto& l : laws_) q = std::max(q, l.quantile(p));
    return q;
}

double PositionLengthMap::support_top_sup() const {
    double q = 0;
    for (auto& l : laws_) q = std::max(q, l.support_top());
    return q;
}

// ------------------------------------------------------------------ ModelSpec

ModelSpec::ModelSpec(IntensityMeasure c, IntensityMeasure a, PositionLengthMap l)
    : clones(std::move(c)), anchors(std::move(a)), lengths(std::move(l)) {
    homogeneous_ = clones.kind() == IntensityMeasure::Kind::Constant &&
                   anchors.kind() == IntensityMeasure::Kind::Constant &&
                   lengths.position_independent();
}

double ModelSpec::kappa() const { return clones.constant_rate(); }
double ModelSpec::alpha() const { return anchors.constant_rate(); }

const LengthLaw& ModelSpec::length_law() const {
    if (!lengths.position_independent())
        throw std::logic_error("length_law: lengths are position-dependent");
    return lengths.laws()[0];
}

ModelSpec homogeneous_spec(double kappa, double alpha, LengthLaw law) {
    return ModelSpec(IntensityMeasure::constant(kappa), IntensityMeasure::constant(alpha),
                     PositionLengthMap(std::move(law)));
}

double measure(const IntensityMeasure& intensity, double lo, double hi, const QuadConfig& quad) {
    return intensity.measure(lo, hi, quad);
}

double survival(const PositionLengthMap& lengths, double x, double t) {
    return lengths.at(x).survival(t);
}

// ------------------------------------------------------------- left-end field

double left_end_intensity(const ModelSpec& spec, double y, const QuadConfig& quad) {
    // c'(y) = sum over atoms t of the law at x=y+t of p_t * c(y+t)
    //       + int_0^inf c(y+t) f_{L_{y+t}}(t) dt
    // The positional map is piecewise, so atom positions are enumerated per piece.
    const auto& lens = spec.lengths;
    double total = 0.0;

    auto piece_bounds = [&](size_t i) -> std::pair<double, double> {
        double lo = (i == 0) ? -kInf : lens.breakpoints()[i - 1];
        double hi = (i == lens.laws().size() - 1) ? kInf : lens.breakpoints()[i];
        return {lo, hi};
    };

    for (size_t i = 0; i < lens.laws().size(); ++i) {
        auto [lo, hi] = piece_bounds(i);
        const LengthLaw& law = lens.laws()[i];
        for (auto& [t, p] : law.atom_list()) {
            double x = y + t;
            if (x > lo && x <= hi && x >= y) total += p * spec.clones.rate_at(x);
        }
    }

    // continuous part, truncated where the tail is provably below tail_mass
    bool has_continuous = false;
    for (auto& l : lens.laws())
        if (!l.is_discrete()) has_continuous = true;
    if (has_continuous) {
        auto integrand = [&](double t) {
            double x = y + t;
            return spec.clones.rate_at(x) * lens.at(x).density(t);
        };
        double csup = spec.clones.sup_rate();
        double t_hi = 1.0;
        while (csup * [&] {
                   double worst = 0;
                   for (auto& l : lens.laws()) worst = std::max(worst, l.mean_excess(t_hi));
                   return worst;
               }() > quad.tail_mass &&
               t_hi < 1e9)
            t_hi *= 2.0;
        std::vector<double> cuts;
        for (double b : lens.breakpoints()) cuts.push_back(b - y);
        for (auto& l : lens.laws()) {
            cuts.push_back(l.param1());
            cuts.push_back(l.param2());
        }
        total += integrate(integrand, 0.0, t_hi, quad, cuts);
    }

    if (!std::isfinite(total)) throw NumericError("left_end_intensity: non-finite value");
    return total;
}

}  // namespace ancov
