#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "ancov/formulas.hpp"
#include "ancov/rng.hpp"
#include "ancov/sampler.hpp"

using namespace ancov;

namespace {

HomogeneousParams unit_params(double kappa = 1.0, double alpha = 1.0) {
    return {kappa, alpha, LengthLaw::deterministic(1.0)};
}

ModelSpec unit_spec(double kappa = 1.0, double alpha = 1.0) {
    return homogeneous_spec(kappa, alpha, LengthLaw::deterministic(1.0));
}

// Equal-rate piecewise spec; distributionally identical to unit_spec but runs
// through the general (inhomogeneous) code paths.
ModelSpec unit_spec_piecewise() {
    return ModelSpec(IntensityMeasure::piecewise({0.0}, {1.0, 1.0}),
                     IntensityMeasure::piecewise({5.0}, {1.0, 1.0}),
                     PositionLengthMap(LengthLaw::deterministic(1.0)));
}

// Closed forms for kappa = alpha = 1, unit deterministic lengths, obtained by
// direct piecewise integration of the double exponential integral.
constexpr double kRhoUnit = 0.57088236602636148;  // e^-1 + 1.5 e^-2
constexpr double kJUnit = 0.73575888234288467;    // 2 e^-1

// Independent oracle for the joint ocean probability r(0, z): sample only the
// anchor process and integrate the clone process out exactly (unit lengths,
// homogeneous rates). Never touches the quadrature machinery under test.
double joint_ocean_oracle(double kappa, double alpha, double z, int reps,
                          std::uint64_t seed, double* stderr_out) {
    RngStream rng(seed, 0);
    const double ell = 1.0;
    double lo = -ell, hi = z + ell;
    double sum = 0, sum2 = 0;
    std::vector<double> anchors;
    for (int rep = 0; rep < reps; ++rep) {
        anchors.clear();
        double x = lo;
        for (;;) {
            x += rng.exponential(alpha);
            if (x >= hi) break;
            anchors.push_back(x);
        }
        // anchored clones covering p have right ends in [p, p+ell] intersected
        // with the union of [a, a+ell]; measure the union over both windows
        auto bad_len = [&](double wlo, double whi) {
            double tot = 0, cur_lo = 1e300, cur_hi = -1e300;
            for (double a : anchors) {
                double s = std::max(a, wlo), e = std::min(a + ell, whi);
                if (e <= s) continue;
                if (s > cur_hi) {
                    if (cur_hi > cur_lo) tot += cur_hi - cur_lo;
                    cur_lo = s;
                    cur_hi = e;
                } else {
                    cur_hi = std::max(cur_hi, e);
                }
            }
            if (cur_hi > cur_lo) tot += cur_hi - cur_lo;
            return tot;
        };
        double b0 = bad_len(0, ell);
        double bz = bad_len(z, z + ell);
        double overlap = (z < ell) ? bad_len(z, ell) : 0.0;
        double v = std::exp(-kappa * (b0 + bz - overlap));
        sum += v;
        sum2 += v * v;
    }
    double mean = sum / reps;
    if (stderr_out) *stderr_out = std::sqrt(std::max(sum2 / reps - mean * mean, 0.0) / reps);
    return mean;
}

}  // namespace

TEST_CASE("J closed forms") {
    auto p = unit_params();
    CHECK(J_hom(p, 0.5) == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
    CHECK(J_hom(p, 1.0) == 1.0);
    CHECK(J_hom(p, 7.0) == 1.0);
    HomogeneousParams pe{2.0, 1.0, LengthLaw::exponential(1.0)};
    CHECK(J_hom(pe, 0.0) == doctest::Approx(std::exp(-2.0)).epsilon(1e-12));
    CHECK(J_hom(unit_params(0.0), 0.3) == 1.0);
}

TEST_CASE("J_general routes") {
    auto spec = unit_spec();
    CHECK(J_general(spec, 0.0, 0.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-10));
    CHECK(J_general(spec, 0.0, 2.0) == 1.0);
    CHECK(J_general(unit_spec(0.0), -1.0, 4.0) == 1.0);
    // piecewise equal-rate spec agrees with the homogeneous shortcut
    auto pw = unit_spec_piecewise();
    for (double gap : {0.0, 0.3, 0.8}) {
        CHECK(J_general(pw, 1.0, 1.0 + gap) ==
              doctest::Approx(J_hom(unit_params(), gap)).epsilon(1e-9));
    }
}

TEST_CASE("J is nondecreasing with limit one") {
    auto laws = {LengthLaw::deterministic(1.0), LengthLaw::exponential(0.8),
                 LengthLaw::uniform(0.2, 2.2), LengthLaw::atoms({0.5, 3.0}, {0.5, 0.5})};
    for (const auto& law : laws) {
        HomogeneousParams p{1.3, 1.0, law};
        double prev = 0;
        for (double u = 0; u <= 12.0; u += 0.05) {
            double j = J_hom(p, u);
            CHECK(j >= prev - 1e-15);
            CHECK(j <= 1.0);
            prev = j;
        }
        CHECK(J_hom(p, 60.0) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("anchor gap probability") {
    auto spec = unit_spec(1.0, 2.0);
    CHECK(A_gap(spec, 0.0, 1.0) == doctest::Approx(std::exp(-2.0)).epsilon(1e-12));
    CHECK(A_gap(spec, 3.0, 3.0) == 1.0);
    ModelSpec gapped(IntensityMeasure::constant(1.0),
                     IntensityMeasure::piecewise({0.0, 1.0}, {1.0, 0.0, 1.0}),
                     PositionLengthMap(LengthLaw::deterministic(1.0)));
    CHECK(A_gap(gapped, 0.0, 1.0) == 1.0);
}

TEST_CASE("mean covering counts") {
    HomogeneousParams p{2.0, 1.0, LengthLaw::exponential(3.0)};
    auto spec = homogeneous_spec(p.kappa, p.alpha, p.lengths);
    CHECK(mean_clone_count(spec, 0.0) == doctest::Approx(6.0).epsilon(1e-9));
    CHECK(mean_clone_count(spec, 13.7) == doctest::Approx(6.0).epsilon(1e-9));

    auto unit = unit_spec();
    CHECK(mean_anchored_count(unit, 0.0) ==
          doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-9));
    CHECK(mean_anchored_count(unit_spec(1.0, 0.0), 0.0) == 0.0);

    // general path on the equal-rate piecewise spec agrees with the shortcut
    auto pw = unit_spec_piecewise();
    CHECK(mean_anchored_count(pw, 1.0) ==
          doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-7));
    CHECK(mean_clone_count(pw, 1.0) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("rho: closed form, degenerate cases, saturation") {
    CHECK(rho_hom(unit_params()) == doctest::Approx(kRhoUnit).epsilon(1e-8));
    CHECK(rho_hom(unit_params(0.0)) == doctest::Approx(1.0).epsilon(1e-9));
    // strong anchoring: every clone is anchored, rho -> J(0)
    double sat = rho_hom(unit_params(1.0, 1000.0));
    CHECK(std::abs(sat - std::exp(-1.0)) < 0.01);
    CHECK(j_weighted(unit_params()) == doctest::Approx(kJUnit).epsilon(1e-9));
}

TEST_CASE("rho decreases in kappa and alpha") {
    double prev = 1.0;
    for (double k : {0.25, 0.5, 1.0, 2.0}) {
        double r = rho_hom(unit_params(k));
        CHECK(r < prev);
        prev = r;
    }
    prev = 1.0;
    for (double a : {0.25, 0.5, 1.0, 2.0}) {
        double r = rho_hom(unit_params(1.0, a));
        CHECK(r < prev);
        prev = r;
    }
}

TEST_CASE("one-point function: translation invariance and route agreement") {
    auto spec = unit_spec();
    double r0 = r_one_point(spec, 0.0);
    double r17 = r_one_point(spec, 17.0);
    CHECK(r0 == doctest::Approx(r17).epsilon(1e-7));
    CHECK(r0 == doctest::Approx(kRhoUnit).epsilon(1e-6));
    CHECK(r_one_point(unit_spec(0.0), 3.0) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(r0 >= 0.0);
    CHECK(r0 <= 1.0);
}

TEST_CASE("one-point function with one-sided anchor support") {
    // no anchors to the left of 0: far left of the anchored region every point
    // is almost surely in the ocean
    ModelSpec spec(IntensityMeasure::constant(1.0),
                   IntensityMeasure::piecewise({0.0}, {0.0, 1.0}),
                   PositionLengthMap(LengthLaw::deterministic(1.0)));
    CHECK(r_one_point(spec, -5.0) == doctest::Approx(1.0).epsilon(1e-8));
    double near = r_one_point(spec, 5.0);
    CHECK(near == doctest::Approx(kRhoUnit).epsilon(1e-5));  // far from the edge
    double at_edge = r_one_point(spec, 0.0);
    CHECK(at_edge > kRhoUnit);  // fewer anchors nearby, more ocean
    CHECK(at_edge < 1.0);
}

TEST_CASE("stationary components at kappa = 0") {
    auto p = unit_params(0.0, 1.5);
    double alpha = 1.5;
    for (double z : {0.0, 0.4, 1.3, 3.0}) {
        double e = std::exp(-alpha * z);
        CHECK(rbar(p, z, 0) == doctest::Approx(e).epsilon(1e-8));
        CHECK(rbar(p, z, 1) == doctest::Approx(alpha * z * e).epsilon(2e-8));
        CHECK(rbar(p, z, 3) == doctest::Approx((1 + alpha * z) * e).epsilon(2e-8));
        double combo = rbar(p, z, 0) + rbar(p, z, 1) - rbar(p, z, 3);
        CHECK(std::abs(combo) < 5e-8);
    }
}

TEST_CASE("pair probability against the anchor-conditioned oracle") {
    auto spec = unit_spec();
    const int reps = 300000;
    for (double z : {0.25, 0.5, 0.9, 1.5}) {
        double se = 0;
        double oracle = joint_ocean_oracle(1.0, 1.0, z, reps, 424242, &se);
        TwoPointDecomposition d = r_two_point(spec, 0.0, z);
        CHECK(std::abs(d.total - oracle) <= 3 * se + 1e-6);
    }
}

TEST_CASE("pair decomposition identities") {
    auto spec = unit_spec();
    // coincident points collapse to the one-point function
    TwoPointDecomposition same = r_two_point(spec, 0.3, 0.3);
    CHECK(same.total == doctest::Approx(kRhoUnit).epsilon(1e-7));
    CHECK(same.r1 == doctest::Approx(0.0));
    CHECK(same.r2 == doctest::Approx(0.0));

    // beyond twice the clone length the events are independent
    TwoPointDecomposition far = r_two_point(spec, 0.0, 2.5);
    CHECK(far.total == doctest::Approx(kRhoUnit * kRhoUnit).epsilon(1e-9));
    // continuity just below the cut
    TwoPointDecomposition near_cut = r_two_point(spec, 0.0, 1.999);
    CHECK(near_cut.total - kRhoUnit * kRhoUnit >= -1e-7);
    CHECK(near_cut.total - kRhoUnit * kRhoUnit <= 1e-4);

    // components are a partition of the joint probability
    for (double gap : {0.2, 0.7, 1.4}) {
        TwoPointDecomposition d = r_two_point(spec, 0.0, gap);
        CHECK(d.total == doctest::Approx(d.r0 + d.r1 + d.r2).epsilon(1e-10));
        CHECK(d.r3 >= -1e-9);
        CHECK(d.r0 >= 0.0);
        CHECK(d.r1 >= 0.0);
        CHECK(d.r2 >= 0.0);
    }
}

TEST_CASE("general two-point route matches the stationary route") {
    auto pw = unit_spec_piecewise();
    auto hom = unit_spec();
    for (double gap : {0.3, 0.9}) {
        TwoPointDecomposition g = r_two_point(pw, 1.0, 1.0 + gap);
        TwoPointDecomposition s = r_two_point(hom, 0.0, gap);
        CHECK(g.total == doctest::Approx(s.total).epsilon(2e-5));
        CHECK(g.r0 == doctest::Approx(s.r0).epsilon(2e-5));
        CHECK(g.r1 == doctest::Approx(s.r1).epsilon(2e-4));
        CHECK(g.r2 == doctest::Approx(s.r2).epsilon(2e-4));
    }
}

namespace {

// plain-MC joint ocean indicators for an arbitrary spec (independent oracle)
void mc_joint(const ModelSpec& spec, double z0, double z1, int reps, std::uint64_t seed,
              double& p0, double& p01, double& se01) {
    double pad = pad_width(spec, 1e-9);
    double G = std::max({z0, z1, 1e-6});
    double s0 = 0, s01 = 0;
    for (int r = 0; r < reps; ++r) {
        RngStream crng(seed, 4ULL * r), arng(seed, 4ULL * r + 1);
        CloneSet clones = sample_clones(spec, G, pad, crng);
        AnchorSet anchors = sample_anchors(spec, G, pad, arng);
        double i0 = count_anchored_covering(clones, anchors, z0) == 0 ? 1.0 : 0.0;
        double i1 = count_anchored_covering(clones, anchors, z1) == 0 ? 1.0 : 0.0;
        s0 += i0;
        s01 += i0 * i1;
    }
    p0 = s0 / reps;
    p01 = s01 / reps;
    se01 = std::sqrt(std::max(p01 * (1 - p01), 1e-12) / reps);
}

}  // namespace

TEST_CASE("general one- and two-point functions vs simulation, varying rates") {
    ModelSpec spec(IntensityMeasure::piecewise({0.5, 1.2}, {0.8, 1.6, 1.0}),
                   IntensityMeasure::piecewise({0.7}, {1.2, 0.6}),
                   PositionLengthMap(LengthLaw::deterministic(1.0)));
    double z = 0.2, zp = 0.9;
    double p0, p01, se01;
    mc_joint(spec, z, zp, 400000, 90210, p0, p01, se01);

    double r_z = r_one_point(spec, z);
    CHECK(std::abs(r_z - p0) <= 3 * std::sqrt(p0 * (1 - p0) / 400000.0) + 1e-6);

    TwoPointDecomposition d = r_two_point(spec, z, zp);
    CHECK(std::abs(d.total - p01) <= 3 * se01 + 1e-6);
}

TEST_CASE("general two-point function vs simulation, position-dependent lengths") {
    ModelSpec spec(IntensityMeasure::constant(1.0), IntensityMeasure::constant(1.0),
                   PositionLengthMap({0.5}, {LengthLaw::deterministic(0.6),
                                             LengthLaw::deterministic(1.4)}));
    double z = 0.2, zp = 0.9;
    double p0, p01, se01;
    mc_joint(spec, z, zp, 400000, 31337, p0, p01, se01);

    double r_z = r_one_point(spec, z);
    CHECK(std::abs(r_z - p0) <= 3 * std::sqrt(p0 * (1 - p0) / 400000.0) + 1e-6);

    TwoPointDecomposition d = r_two_point(spec, z, zp);
    CHECK(std::abs(d.total - p01) <= 3 * se01 + 1e-6);
}

TEST_CASE("random-model properties") {
    // hand-rolled generator over piecewise specs; structural identities only
    RngStream gen(2026, 0);
    QuadConfig quad;
    for (int trial = 0; trial < 8; ++trial) {
        std::vector<double> breaks;
        double b = -2.0 + 2 * gen.uniform();
        for (int i = 0; i < 3; ++i) {
            breaks.push_back(b);
            b += 0.3 + 2 * gen.uniform();
        }
        auto rand_rates = [&](bool allow_zero) {
            std::vector<double> r;
            for (std::size_t i = 0; i <= breaks.size(); ++i) {
                double v = 2.5 * gen.uniform();
                if (allow_zero && gen.uniform() < 0.2) v = 0.0;
                r.push_back(v);
            }
            return r;
        };
        IntensityMeasure clones = IntensityMeasure::piecewise(breaks, rand_rates(true));
        IntensityMeasure anchors = IntensityMeasure::piecewise(breaks, rand_rates(false));
        LengthLaw law = (trial % 2) ? LengthLaw::exponential(0.3 + gen.uniform())
                                    : LengthLaw::uniform(0.0, 0.5 + gen.uniform());
        ModelSpec spec(clones, anchors, PositionLengthMap(law));

        // additivity of the intensity over a random split
        double lo = -3 + gen.uniform(), hi = 3 + gen.uniform();
        double mid = lo + (hi - lo) * gen.uniform();
        CHECK(measure(spec.clones, lo, hi) ==
              doctest::Approx(measure(spec.clones, lo, mid) + measure(spec.clones, mid, hi))
                  .epsilon(1e-10));

        // gap probabilities multiply over adjacent intervals
        CHECK(A_gap(spec, lo, hi, quad) ==
              doctest::Approx(A_gap(spec, lo, mid, quad) * A_gap(spec, mid, hi, quad))
                  .epsilon(1e-10));

        // no-shared-clone probability grows with the gap and stays in (0, 1]
        double x = lo;
        double prev = 0.0;
        for (double y : {x, x + 0.4, x + 1.1, x + 3.0}) {
            double jxy = J_general(spec, x, y, quad);
            CHECK(jxy >= prev - 1e-12);
            CHECK(jxy > 0.0);
            CHECK(jxy <= 1.0);
            prev = jxy;
        }

        // one-point ocean probability is a probability
        double r = r_one_point(spec, mid, quad);
        CHECK(r >= 0.0);
        CHECK(r <= 1.0);
    }
}

TEST_CASE("covariance kernel positivity and support") {
    auto analysis = two_point_analysis(unit_params());
    CHECK(analysis->support_cut() == doctest::Approx(2.0));
    for (double z : {0.0, 0.3, 0.9, 1.2, 1.7, 1.95}) {
        CHECK(analysis->pair_covariance(z) >= -1e-9);
    }
    CHECK(analysis->pair_covariance(0.0) ==
          doctest::Approx(kRhoUnit - kRhoUnit * kRhoUnit).epsilon(1e-7));
    CHECK(analysis->pair_covariance(2.0) == 0.0);
    CHECK(analysis->pair_covariance(3.0) == 0.0);
}

TEST_CASE("component envelopes hold on a grid") {
    auto analysis = two_point_analysis(unit_params());
    double j = analysis->j_weighted();
    for (double z : {0.05, 0.3, 0.6, 0.9, 1.2, 1.8, 2.5}) {
        double e = std::exp(-z);
        CHECK(analysis->rbar(0, z) <= e * j + 1e-9);
        CHECK(analysis->rbar(1, z) <= z * e * j * j + 1e-9);
        CHECK(analysis->rbar(3, z) <= (1 + z) * e * j * j + 1e-9);
    }
}

TEST_CASE("variance constants: degenerate cancellation and positivity") {
    VarianceConstants zero = variance_constants(unit_params(0.0));
    CHECK(std::abs(zero.nu()) < 1e-7);
    CHECK(std::abs(zero.lambda()) < 1e-7);
    // componentwise values match the no-clone closed forms
    CHECK(zero.nu0 == doctest::Approx(2.0).epsilon(1e-7));
    CHECK(zero.nu1 == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(zero.nu3 == doctest::Approx(4.0).epsilon(1e-6));

    VarianceConstants vc = variance_constants(unit_params());
    CHECK(vc.nu() > 0);
    CHECK(vc.lambda() > 0);
}

TEST_CASE("sparse-clone variance slope approaches E(L^2 (1 - e^{-alpha L}))") {
    // the rare-clone regime is a compound Poisson of isolated anchored clones,
    // so the variance slope per unit clone rate is the second moment of the
    // clone length weighted by its anchoring probability
    double kappa = 1e-3;
    {
        VarianceConstants vc = variance_constants(unit_params(kappa));
        double target = 1.0 - std::exp(-1.0);
        CHECK(vc.nu() / kappa == doctest::Approx(target).epsilon(0.02));
    }
    {
        HomogeneousParams p{kappa, 1.0, LengthLaw::exponential(1.0)};
        VarianceConstants vc = variance_constants(p);
        double target = 2.0 - 0.25;  // E L^2 - E(L^2 e^{-L}) for Exp(1)
        CHECK(vc.nu() / kappa == doctest::Approx(target).epsilon(0.02));
    }
}

TEST_CASE("variance curve: exactness, small-G law, monotone convexity") {
    auto analysis = two_point_analysis(unit_params());
    VarianceConstants vc = analysis->constants();

    CHECK(variance_exact(unit_params(), 0.0) == 0.0);
    // for unit lengths the kernel vanishes beyond 2, so the line is exact there
    for (double G : {2.0, 5.0, 12.0}) {
        CHECK(std::abs(analysis->variance(G) - (vc.nu() * G - vc.lambda())) < 1e-6);
    }
    // small windows: variance ~ rho (1 - rho) G^2
    double G = 1e-3;
    double v = analysis->variance(G);
    double target = kRhoUnit * (1 - kRhoUnit) * G * G;
    CHECK(v / target == doctest::Approx(1.0).epsilon(0.01));

    // increasing and convex on a grid
    std::vector<double> vs;
    for (double g = 0.25; g <= 6.0; g += 0.25) vs.push_back(analysis->variance(g));
    for (std::size_t i = 1; i < vs.size(); ++i) CHECK(vs[i] >= vs[i - 1] - 1e-9);
    for (std::size_t i = 2; i < vs.size(); ++i)
        CHECK(vs[i] - 2 * vs[i - 1] + vs[i - 2] >= -1e-7);
}

TEST_CASE("variance sandwich against the constants") {
    auto analysis = two_point_analysis(unit_params());
    VarianceConstants vc = analysis->constants();
    for (double G : {0.5, 1.0, 3.0, 7.0, 20.0}) {
        double v = analysis->variance(G);
        CHECK(v >= vc.nu() * G - vc.lambda() - 1e-7);
        CHECK(v <= vc.nu() * G + 1e-7);
        CHECK(std::abs(vc.nu() * G - vc.lambda() - v) <= tau_bound(unit_params(), G) + 1e-7);
    }
}

TEST_CASE("tau bound closed form") {
    auto p = unit_params();
    CHECK(tau_bound(p, 0.0) == doctest::Approx(6.0).epsilon(1e-12));
    CHECK(tau_bound(p, 20.0) == doctest::Approx(46.0 * std::exp(-20.0)).epsilon(1e-12));
    HomogeneousParams p2{1.0, 2.0, LengthLaw::deterministic(1.0)};
    CHECK(tau_bound(p2, 1.0) == doctest::Approx(0.5 * 5.0 * std::exp(-2.0)).epsilon(1e-12));
}

TEST_CASE("phi values and positivity") {
    CHECK(phi(0.0) == 0.0);
    CHECK(phi(1.0) == doctest::Approx(0.5 * std::exp(-1.0)).epsilon(1e-12));
    CHECK(phi(2.0) == doctest::Approx(1.0 - std::exp(-2.0)).epsilon(1e-12));
    for (double x = 0.01; x < 10; x += 0.17) CHECK(phi(x) > 0.0);
    // series branch continuous with the direct branch
    CHECK(phi(0.99e-4) == doctest::Approx(phi(1.01e-4)).epsilon(0.07));
}

TEST_CASE("nu_vanishing evaluates kappa alpha^-2 E phi(alpha L)") {
    HomogeneousParams det = unit_params(0.5);
    CHECK(nu_vanishing(det) == doctest::Approx(0.5 * 0.5 * std::exp(-1.0)).epsilon(1e-10));
    HomogeneousParams ex{2.0, 1.0, LengthLaw::exponential(1.0)};
    // E phi(L) = E L - 1 + E e^-L - E(L^2 e^-L)/2 = 0.5 - 0.125 = 0.375
    CHECK(nu_vanishing(ex) == doctest::Approx(2.0 * 0.375).epsilon(1e-8));
}

TEST_CASE("limit asymptotics record") {
    HomogeneousParams tiny{1.0, 1.0, LengthLaw::deterministic(0.05)};
    LimitAsymptotics la = limit_asymptotics(tiny);
    CHECK(la.nu_smallL3 == doctest::Approx(0.05 * 0.05 * 0.05 / 3.0).epsilon(1e-12));
    CHECK(la.ocean_deficit_smallL == doctest::Approx(0.05).epsilon(1e-12));
    auto unit = unit_params();
    CHECK(limit_asymptotics(unit).ocean_deficit_smallKappa ==
          doctest::Approx(std::exp(-1.0)).epsilon(1e-10));
}

TEST_CASE("third moment degenerate cases and coarse bands") {
    CHECK(third_moment(unit_params(0.0), 5.0).value == doctest::Approx(125.0));
    CHECK(third_moment(unit_params(1.0, 0.0), 5.0).value == doctest::Approx(125.0));

    ThirdMomentResult tm = third_moment(unit_params(), 5.0, QuadConfig{}, 2718, 8192, 16);
    CHECK(tm.stderr_ > 0);
    CHECK(tm.stderr_ < 0.5);
    // coarse bracket E(O_G)^3 < E(O_G^3) < G^3; the tight cross-check against
    // simulation lives in the Monte Carlo suite
    double mean_cubed = std::pow(kRhoUnit * 5.0, 3.0);
    CHECK(tm.value > mean_cubed);
    CHECK(tm.value < 125.0);
}

TEST_CASE("mixing bounds") {
    auto p = unit_params();
    CHECK(mixing_bound(p, 1.0) == 0.0);
    CHECK(mixing_bound(p, 0.0) == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-12));
    HomogeneousParams pe{1.0, 1.0, LengthLaw::exponential(1.0)};
    double tail3 = std::exp(-3.0);
    double expected = std::min(1.0 - std::exp(-tail3), tail3);
    CHECK(mixing_bound(pe, 3.0) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(mixing_bound(pe, 3.0) <= tail3);
    MixingSummability ms = mixing_bound_sum(pe);
    CHECK(ms.summable);
    CHECK(ms.sum > 0);
    CHECK(ms.sum < 2.0);
}

TEST_CASE("inhomogeneous bounds") {
    auto law = LengthLaw::deterministic(1.0);
    UniformBandParams collapsed{1.0, 1.0, 1.0, 1.0, law, law};
    InhomogeneousBounds b = inhomogeneous_bounds(collapsed);
    CHECK(b.rho_minus == doctest::Approx(kRhoUnit).epsilon(1e-8));
    CHECK(b.rho_plus == doctest::Approx(kRhoUnit).epsilon(1e-8));
    CHECK(b.nu_plus == doctest::Approx(4.0));
    double h = (1 - kRhoUnit) * kRhoUnit;
    CHECK(b.nu_minus == doctest::Approx(h * h / 4.0).epsilon(1e-7));

    UniformBandParams band{0.5, 2.0, 0.5, 2.0, law, law};
    InhomogeneousBounds wide = inhomogeneous_bounds(band);
    CHECK(wide.rho_minus < wide.rho_plus);
    CHECK(wide.nu_minus < wide.nu_plus);
    CHECK_THROWS_AS(inhomogeneous_bounds(UniformBandParams{0.0, 1.0, 1.0, 1.0, law, law}),
                    std::invalid_argument);
}

TEST_CASE("density anchor intensity goes through the numeric inversion path") {
    // flat density equals the constant-rate model, so the one-point value is known
    ModelSpec spec(IntensityMeasure::constant(1.0),
                   IntensityMeasure::density([](double) { return 1.0; }, 1.0),
                   PositionLengthMap(LengthLaw::deterministic(1.0)));
    QuadConfig loose;
    loose.abs_tol = 1e-6;
    loose.rel_tol = 1e-6;
    loose.tail_mass = 1e-9;
    CHECK(r_one_point(spec, 0.0, loose) == doctest::Approx(kRhoUnit).epsilon(1e-3));
}

TEST_CASE("general route collapses to the one-point value at coincident points") {
    auto pw = unit_spec_piecewise();
    TwoPointDecomposition d = r_two_point(pw, 1.3, 1.3);
    CHECK(d.total == doctest::Approx(r_one_point(pw, 1.3)).epsilon(1e-6));
    CHECK(d.r1 == doctest::Approx(0.0));
    CHECK(d.r2 == doctest::Approx(0.0));
}

TEST_CASE("third moment reports unconverged runs") {
    ThirdMomentResult tm =
        third_moment(unit_params(), 5.0, QuadConfig{}, 2718, 512, 8, 1e-12);
    CHECK_FALSE(tm.converged);
    CHECK(tm.stderr_ > 1e-12);
}

TEST_CASE("preconditions raise argument errors") {
    CHECK_THROWS_AS(J_hom(unit_params(), -0.1), std::invalid_argument);
    CHECK_THROWS_AS(A_gap(unit_spec(), 1.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(phi(-1.0), std::invalid_argument);
    CHECK_THROWS_AS(tau_bound(unit_params(), -1.0), std::invalid_argument);
    CHECK_THROWS_AS(variance_exact(unit_params(), -2.0), std::invalid_argument);
    CHECK_THROWS_AS(rbar(unit_params(), 0.5, 2), std::invalid_argument);
    CHECK_THROWS_AS(rho_hom({1.0, 0.0, LengthLaw::deterministic(1.0)}),
                    std::invalid_argument);
    CHECK_THROWS_AS(third_moment(unit_params(), 0.0), std::invalid_argument);
}
