#pragma once

#include <memory>

#include "ancov/model.hpp"
#include "ancov/rng.hpp"

namespace ancov {

// Homogeneous model: constant clone rate kappa, constant anchor rate alpha,
// position-independent length law.
struct HomogeneousParams {
    double kappa;
    double alpha;
    LengthLaw lengths;
};

HomogeneousParams as_homogeneous(const ModelSpec& spec);

// Long-run variance slope nu and intercept lambda of the ocean measure,
// split by the anchor-count pattern between the two points
// (0 anchors / exactly 1 / two or more).
struct VarianceConstants {
    double nu0 = 0, nu1 = 0, nu3 = 0;
    double lambda0 = 0, lambda1 = 0, lambda3 = 0;
    double nu() const { return nu0 + nu1 - nu3; }
    double lambda() const { return lambda0 + lambda1 - lambda3; }
};

struct TwoPointDecomposition {
    double total = 0;  // P(z in ocean, z' in ocean)
    double r0 = 0;     // ... and no anchor strictly between
    double r1 = 0;     // ... and exactly one anchor between
    double r2 = 0;     // ... and two or more anchors between
    double r3 = 0;     // r(z) r(z') - r2
};

// ---------------------------------------------------------------- basic laws

// P(no single clone covers both x and y), x <= y.
double J_general(const ModelSpec& spec, double x, double y, const QuadConfig& quad = {});

// Homogeneous version as a function of the gap u = y - x >= 0.
double J_hom(const HomogeneousParams& params, double u);

// P(no anchor in [x, y]).
double A_gap(const ModelSpec& spec, double x, double y, const QuadConfig& quad = {});

// Mean number of clones / anchored clones covering x.
double mean_clone_count(const ModelSpec& spec, double x, const QuadConfig& quad = {});
double mean_anchored_count(const ModelSpec& spec, double x, const QuadConfig& quad = {});

// ------------------------------------------------------------ ocean functions

// P(z lies in the ocean).
double r_one_point(const ModelSpec& spec, double z, const QuadConfig& quad = {});

// Mean ocean fraction of the homogeneous model.
double rho_hom(const HomogeneousParams& params, const QuadConfig& quad = {});

// Exponentially weighted mean of J: j = int_0^inf alpha e^{-alpha x} J(x) dx.
double j_weighted(const HomogeneousParams& params, const QuadConfig& quad = {});

// Joint ocean probability of two points with the anchor-pattern decomposition.
TwoPointDecomposition r_two_point(const ModelSpec& spec, double z, double zp,
                                  const QuadConfig& quad = {});

// Stationary two-point component i in {0, 1, 3} at gap z >= 0 for a
// homogeneous spec; rbar(0,.) + rbar(1,.) - rbar(3,.) is the covariance
// kernel r(0,z) - rho^2.
double rbar(const HomogeneousParams& params, double z, int i, const QuadConfig& quad = {});

// Covariance kernel itself.
double pair_covariance(const HomogeneousParams& params, double z, const QuadConfig& quad = {});

// -------------------------------------------------------- variance machinery

VarianceConstants variance_constants(const HomogeneousParams& params, const QuadConfig& quad = {});

// Var(O_G) by quadrature of the covariance kernel.
double variance_exact(const HomogeneousParams& params, double G, const QuadConfig& quad = {});

// Closed-form envelope for |nu G - lambda - Var(O_G)|.
double tau_bound(const HomogeneousParams& params, double G);

// phi(x) = x - 1 + e^{-x} (1 - x^2/2); first-order variance-slope integrand of
// the sparse-clone expansion.
double phi(double x);

// kappa * alpha^{-2} * E phi(alpha L).
double nu_vanishing(const HomogeneousParams& params, const QuadConfig& quad = {});

// First-order predictions of the three limiting regimes.
struct LimitAsymptotics {
    double nu_smallL3;               // (1/3) alpha kappa E(L^3)
    double ocean_deficit_smallKappa; // kappa E(L e^{-alpha L})
    double ocean_deficit_smallL;     // kappa E(L)
};
LimitAsymptotics limit_asymptotics(const HomogeneousParams& params, const QuadConfig& quad = {});

// ------------------------------------------------------------- higher moments

// E(O_G^3) by randomized quasi-Monte Carlo over the ordered-triple pattern
// decomposition; the standard error comes from the randomization replicates.
struct ThirdMomentResult {
    double value = 0;
    double stderr_ = 0;
    bool converged = true;  // false when stderr_ exceeds the requested tolerance
};
ThirdMomentResult third_moment(const HomogeneousParams& params, double G,
                               const QuadConfig& quad = {}, std::uint64_t seed = 2718,
                               int points = 4096, int replicates = 16,
                               double tolerance = kInf);

// ------------------------------------------------------------- mixing, bounds

// Upper bound for the strong mixing coefficient at separation n.
double mixing_bound(const HomogeneousParams& params, double n, const QuadConfig& quad = {});

// Partial sum of the mixing bounds (finite whenever E L^2 is).
struct MixingSummability {
    bool summable = false;
    double sum = 0;
};
MixingSummability mixing_bound_sum(const HomogeneousParams& params, const QuadConfig& quad = {});

// Envelopes for inhomogeneous models squeezed between homogeneous ones.
struct UniformBandParams {
    double kappa_lo, kappa_hi;
    double alpha_lo, alpha_hi;
    LengthLaw length_lo, length_hi;  // stochastic lower / upper bounds
};
struct InhomogeneousBounds {
    double rho_minus, rho_plus;
    double nu_minus, nu_plus;
};
InhomogeneousBounds inhomogeneous_bounds(const UniformBandParams& band,
                                         const QuadConfig& quad = {});

// ------------------------------------------------- shared stationary analysis

// Heavy two-point machinery for one homogeneous parameter set: memoizes the
// inner kernels so variance curves and constants reuse evaluations. The free
// functions above route through a process-wide cache of these.
class TwoPointAnalysis {
  public:
    TwoPointAnalysis(HomogeneousParams params, QuadConfig quad);
    ~TwoPointAnalysis();
    TwoPointAnalysis(const TwoPointAnalysis&) = delete;
    TwoPointAnalysis& operator=(const TwoPointAnalysis&) = delete;

    double rho() const;
    double j_weighted() const;
    double rbar(int i, double z) const;
    double pair_covariance(double z) const;
    TwoPointDecomposition decompose(double gap) const;
    VarianceConstants constants() const;
    double variance(double G) const;
    // separation beyond which the covariance kernel is zero (twice the length
    // support bound) or numerically negligible (unbounded laws)
    double support_cut() const;

    const HomogeneousParams& params() const;

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// Shared-cache accessor used by the free functions; exposed so long test
// sequences can hold onto one analysis.
std::shared_ptr<TwoPointAnalysis> two_point_analysis(const HomogeneousParams& params,
                                                     const QuadConfig& quad = {});

}  // namespace ancov
