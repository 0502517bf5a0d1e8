#pragma once

#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <vector>

#include "ancov/quad.hpp"

namespace ancov {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Locally finite intensity measure on the real line. Three shapes:
//   Constant(rate)                      rate everywhere
//   PiecewiseConstant(breaks, rates)    rates[i] on (breaks[i-1], breaks[i]);
//                                       rates.front()/back() extend to -inf/+inf
//   Density(f, bound)                   arbitrary density with a declared sup bound
// Rates must be nonnegative; Density is audited against its bound on a grid
// at construction.
class IntensityMeasure {
  public:
    enum class Kind { Constant, PiecewiseConstant, Density };

    static IntensityMeasure constant(double rate);
    static IntensityMeasure piecewise(std::vector<double> breakpoints, std::vector<double> rates);
    static IntensityMeasure density(std::function<double(double)> f, double bound,
                                    double audit_lo = -64.0, double audit_hi = 64.0);

    Kind kind() const { return kind_; }
    // pointwise rate (density value) at x
    double rate_at(double x) const;
    // sup of the rate; for Density this is the declared bound
    double sup_rate() const { return sup_rate_; }
    // integral of the rate over [lo, hi]
    double measure(double lo, double hi, const QuadConfig& quad = {}) const;

    // Smallest y >= z with measure(z, y) == mass, or nullopt when the total
    // mass to the right of z is below mass (then "no point that far" has
    // positive probability). Symmetric variant walks left of z.
    std::optional<double> invert_mass_right(double z, double mass, const QuadConfig& quad = {}) const;
    std::optional<double> invert_mass_left(double z, double mass, const QuadConfig& quad = {}) const;

    bool is_zero() const { return sup_rate_ == 0.0; }
    const std::vector<double>& breakpoints() const { return breaks_; }
    const std::vector<double>& rates() const { return rates_; }
    double constant_rate() const;

  private:
    IntensityMeasure() = default;
    Kind kind_ = Kind::Constant;
    std::vector<double> breaks_;  // sorted; size() + 1 == rates_.size() for piecewise
    std::vector<double> rates_;
    std::function<double(double)> f_;
    double sup_rate_ = 0.0;
};

// Clone length distribution. Survival uses the closed convention
// S(t) = P(L >= t), so Deterministic(l) has S(l) = 1.
class LengthLaw {
  public:
    enum class Kind { Deterministic, Exponential, UniformInterval, DiscreteAtoms };

    static LengthLaw deterministic(double value);
    static LengthLaw exponential(double mean);
    static LengthLaw uniform(double a, double b);
    static LengthLaw atoms(std::vector<double> values, std::vector<double> probabilities);

    Kind kind() const { return kind_; }
    double survival(double t) const;          // P(L >= t), t >= 0
    double quantile(double p) const;          // inf{ t : P(L <= t) >= p }
    double mean_excess(double u) const;       // E (L - u)^+
    double density(double t) const;           // 0 for atom laws
    double mean() const;
    double moment2() const;
    double moment3() const;
    // sup of the support; +inf for Exponential
    double support_top() const;
    // E g(L): exact sums for atom laws, quadrature against the density otherwise
    double expect(const std::function<double(double)>& g, const QuadConfig& quad = {}) const;
    // atoms (value, probability); empty for continuous laws
    const std::vector<std::pair<double, double>>& atom_list() const { return atoms_; }
    bool is_discrete() const {
        return kind_ == Kind::Deterministic || kind_ == Kind::DiscreteAtoms;
    }
    double param1() const { return p1_; }
    double param2() const { return p2_; }

  private:
    LengthLaw() = default;
    Kind kind_ = Kind::Deterministic;
    double p1_ = 0.0, p2_ = 0.0;  // value / mean / (a,b)
    std::vector<std::pair<double, double>> atoms_;
};

// Position-dependent length law: a piecewise map over a finite partition.
// Pieces are (breaks[i-1], breaks[i]]-style cells; laws.front()/back() extend
// to -inf/+inf. A single-law map is the position-independent case.
class PositionLengthMap {
  public:
    PositionLengthMap(LengthLaw everywhere);  // NOLINT(google-explicit-constructor)
    PositionLengthMap(std::vector<double> breakpoints, std::vector<LengthLaw> laws);

    const LengthLaw& at(double x) const;
    bool position_independent() const { return laws_.size() == 1; }
    const std::vector<double>& breakpoints() const { return breaks_; }
    const std::vector<LengthLaw>& laws() const { return laws_; }
    // max over pieces of per-law quantile / support top
    double quantile_sup(double p) const;
    double support_top_sup() const;

  private:
    std::vector<double> breaks_;
    std::vector<LengthLaw> laws_;
};

// Full parameterization of the model: clone right-end intensity, anchor
// intensity, and the (possibly position-dependent) clone length law.
struct ModelSpec {
    IntensityMeasure clones;
    IntensityMeasure anchors;
    PositionLengthMap lengths;

    ModelSpec(IntensityMeasure c, IntensityMeasure a, PositionLengthMap l);

    bool homogeneous() const { return homogeneous_; }
    // clone / anchor rate shortcuts, valid in the homogeneous case
    double kappa() const;
    double alpha() const;
    const LengthLaw& length_law() const;

  private:
    bool homogeneous_ = false;
};

// Convenience constructor for the homogeneous case.
ModelSpec homogeneous_spec(double kappa, double alpha, LengthLaw law);

// measure(intensity, [lo,hi]); thin wrapper kept for symmetry with survival().
double measure(const IntensityMeasure& intensity, double lo, double hi,
               const QuadConfig& quad = {});

// P(L_x >= t) for the law in force at position x.
double survival(const PositionLengthMap& lengths, double x, double t);

// Density of the left-end intensity c'(y) = int_y^inf c(dx) P(L_x in x - dy),
// assembled from the atom part (exact sums) and the continuous part
// (quadrature with tail truncation).
double left_end_intensity(const ModelSpec& spec, double y, const QuadConfig& quad = {});

}  // namespace ancov
