#include "ancov/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace ancov {

double pad_width(const ModelSpec& spec, double epsilon) {
    if (!(epsilon > 0)) throw std::invalid_argument("pad_width: epsilon must be > 0");
    double top = spec.lengths.support_top_sup();
    if (std::isfinite(top)) return top;
    double q = spec.lengths.quantile_sup(1.0 - epsilon);
    if (!std::isfinite(q)) throw std::invalid_argument("pad_width: no finite quantile at 1-epsilon");
    return q;
}

namespace {

// Poisson arrivals at constant rate on [lo, hi), appended in increasing order.
void arrivals_constant(double rate, double lo, double hi, RngStream& rng,
                       std::vector<double>& out) {
    if (rate <= 0 || hi <= lo) return;
    double x = lo;
    for (;;) {
        x += rng.exponential(rate);
        if (x >= hi) return;
        out.push_back(x);
    }
}

// Poisson points of the given intensity on [lo, hi), increasing order.
// Inversion per constant piece; thinning against the sup bound for densities.
std::vector<double> sample_points(const IntensityMeasure& intensity, double lo, double hi,
                                  RngStream& rng) {
    std::vector<double> pts;
    switch (intensity.kind()) {
        case IntensityMeasure::Kind::Constant:
            arrivals_constant(intensity.constant_rate(), lo, hi, rng, pts);
            break;
        case IntensityMeasure::Kind::PiecewiseConstant: {
            const auto& breaks = intensity.breakpoints();
            const auto& rates = intensity.rates();
            double cur = lo;
            for (std::size_t i = 0; i < breaks.size() && cur < hi; ++i) {
                if (breaks[i] <= cur) continue;
                double seg_hi = std::min(breaks[i], hi);
                arrivals_constant(rates[i], cur, seg_hi, rng, pts);
                cur = seg_hi;
            }
            if (cur < hi) arrivals_constant(rates.back(), cur, hi, rng, pts);
            break;
        }
        case IntensityMeasure::Kind::Density: {
            double bound = intensity.sup_rate();
            double x = lo;
            for (;;) {
                x += rng.exponential(bound);
                if (x >= hi) break;
                if (rng.uniform() * bound <= intensity.rate_at(x)) pts.push_back(x);
            }
            break;
        }
    }
    return pts;
}

double draw_length(const LengthLaw& law, RngStream& rng) {
    switch (law.kind()) {
        case LengthLaw::Kind::Deterministic:
            return law.param1();
        case LengthLaw::Kind::Exponential:
            return rng.exponential(1.0 / law.param1());
        case LengthLaw::Kind::UniformInterval:
            return rng.uniform(law.param1(), law.param2());
        case LengthLaw::Kind::DiscreteAtoms: {
            double u = rng.uniform(), cum = 0;
            for (auto& [v, p] : law.atom_list()) {
                cum += p;
                if (u <= cum) return v;
            }
            return law.atom_list().back().first;
        }
    }
    return 0.0;
}

}  // namespace

CloneSet sample_clones(const ModelSpec& spec, double G, double pad, RngStream& rng) {
    if (!(G > 0) || !(pad >= 0)) throw std::invalid_argument("sample_clones: need G > 0, pad >= 0");
    CloneSet cs;
    cs.region_lo = 0.0;
    cs.region_hi = G + pad;
    auto pts = sample_points(spec.clones, cs.region_lo, cs.region_hi, rng);
    cs.entries.reserve(pts.size());
    for (double x : pts) cs.entries.push_back({x, draw_length(spec.lengths.at(x), rng)});
    return cs;
}

AnchorSet sample_anchors(const ModelSpec& spec, double G, double pad, RngStream& rng) {
    if (!(G > 0) || !(pad >= 0)) throw std::invalid_argument("sample_anchors: need G > 0, pad >= 0");
    AnchorSet as;
    as.region_lo = -pad;
    as.region_hi = G + pad;
    as.positions = sample_points(spec.anchors, as.region_lo, as.region_hi, rng);
    return as;
}

CloneSet anchored_clones(const CloneSet& clones, const AnchorSet& anchors) {
    CloneSet out;
    out.region_lo = clones.region_lo;
    out.region_hi = clones.region_hi;
    const auto& A = anchors.positions;
    for (const Clone& c : clones.entries) {
        auto it = std::lower_bound(A.begin(), A.end(), c.right_end - c.length);
        if (it != A.end() && *it <= c.right_end) out.entries.push_back(c);
    }
    return out;
}

IslandSet islands(const CloneSet& anchored) {
    std::vector<std::pair<double, double>> iv;
    iv.reserve(anchored.entries.size());
    for (const Clone& c : anchored.entries) iv.push_back({c.right_end - c.length, c.right_end});
    std::sort(iv.begin(), iv.end());
    IslandSet out;
    for (auto& [lo, hi] : iv) {
        if (!out.intervals.empty() && lo <= out.intervals.back().second)
            out.intervals.back().second = std::max(out.intervals.back().second, hi);
        else
            out.intervals.push_back({lo, hi});
    }
    return out;
}

double ocean_measure(const IslandSet& isl, double a, double b) {
    if (a > b) throw std::invalid_argument("ocean_measure: reversed interval");
    double covered = 0;
    for (auto& [lo, hi] : isl.intervals) {
        double s = std::max(lo, a), e = std::min(hi, b);
        if (e > s) covered += e - s;
    }
    return (b - a) - covered;
}

std::size_t count_covering(const CloneSet& clones, double x) {
    std::size_t n = 0;
    auto it = std::lower_bound(clones.entries.begin(), clones.entries.end(), x,
                               [](const Clone& c, double v) { return c.right_end < v; });
    for (; it != clones.entries.end(); ++it)
        if (it->right_end - it->length <= x) ++n;
    return n;
}

std::size_t count_anchored_covering(const CloneSet& clones, const AnchorSet& anchors, double x) {
    std::size_t n = 0;
    const auto& A = anchors.positions;
    auto it = std::lower_bound(clones.entries.begin(), clones.entries.end(), x,
                               [](const Clone& c, double v) { return c.right_end < v; });
    for (; it != clones.entries.end(); ++it) {
        if (it->right_end - it->length > x) continue;
        auto a = std::lower_bound(A.begin(), A.end(), it->right_end - it->length);
        if (a != A.end() && *a <= it->right_end) ++n;
    }
    return n;
}

std::vector<double> theta_path(const ModelSpec& spec, double G, const std::vector<double>& grid,
                               double rho, double nu, RngStream& rng) {
    if (!spec.homogeneous()) throw std::invalid_argument("theta_path: spec must be homogeneous");
    if (!(nu > 0)) throw std::invalid_argument("theta_path: nu must be > 0");
    double pad = pad_width(spec, 1e-9);
    CloneSet clones = sample_clones(spec, G, pad, rng);
    RngStream anchor_rng(rng.seed(), rng.stream_id() ^ 0x517cc1b727220a95ULL);
    AnchorSet anchors = sample_anchors(spec, G, pad, anchor_rng);
    IslandSet isl = islands(anchored_clones(clones, anchors));
    double norm = std::sqrt(nu * G);
    std::vector<double> theta;
    theta.reserve(grid.size());
    for (double t : grid) {
        double oc = ocean_measure(isl, 0.0, G * t);
        theta.push_back((oc - rho * G * t) / norm);
    }
    return theta;
}

void write_clones_csv(std::ostream& os, const CloneSet& clones) {
    os << "right_end,length\n";
    for (const Clone& c : clones.entries) os << c.right_end << ',' << c.length << '\n';
}

void write_anchors_csv(std::ostream& os, const AnchorSet& anchors) {
    os << "position\n";
    for (double a : anchors.positions) os << a << '\n';
}

void write_islands_csv(std::ostream& os, const IslandSet& isl) {
    os << "start,end\n";
    for (auto& [s, e] : isl.intervals) os << s << ',' << e << '\n';
}

}  // namespace ancov
