#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ancov {

// Tolerances and truncation rules shared by every integral evaluator.
struct QuadConfig {
    double abs_tol = 1e-9;
    double rel_tol = 1e-8;
    double tail_mass = 1e-12;  // admissible mass dropped when truncating semi-infinite integrals
    int max_subdiv = 1 << 14;

    void validate() const;
    QuadConfig tightened(double factor) const;
};

// Raised when an integral cannot be evaluated to the requested tolerance
// or produces a non-finite value.
class NumericError : public std::runtime_error {
  public:
    explicit NumericError(const std::string& what, double achieved_error = -1.0)
        : std::runtime_error(what), achieved_error_(achieved_error) {}
    double achieved_error() const { return achieved_error_; }

  private:
    double achieved_error_;
};

using Fn1 = std::function<double(double)>;

// Adaptive Gauss-Kronrod (G7,K15) on [a, b].  breakpoints, when given, seed the
// initial panel set; pass the locations of integrand kinks when they are known.
double integrate(const Fn1& f, double a, double b, const QuadConfig& quad,
                 const std::vector<double>& breakpoints = {});

// One G7/K15 pass on [a, b]; result plus error estimate. Building block for
// integrate(); exposed for tests.
struct PanelResult {
    double value;
    double error;
};
PanelResult gk15(const Fn1& f, double a, double b);

// Integral of g against the unit-mass exponential weight on [0, inf):
//   int_0^inf rate * exp(-rate*u) * g(u) du
// computed by the substitution p = exp(-rate*u) as an adaptive integral over (0, 1].
// g_breaks lists kink locations of g in the u variable.
double integrate_exp_weight(const Fn1& g, double rate, const QuadConfig& quad,
                            const std::vector<double>& g_breaks = {});

}  // namespace ancov
