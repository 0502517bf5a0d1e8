#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "ancov/formulas.hpp"
#include "ancov/model.hpp"
#include "ancov/sampler.hpp"

namespace ancov {

// Replicated ocean-measure summary on [0, G].
struct OceanStats {
    std::uint64_t reps = 0;
    double G = 0;
    std::uint64_t seed = 0;
    double mean = 0;
    double variance = 0;
    double third_central = 0;
    double se_mean = 0;
    double se_variance = 0;
    double se_third = 0;
};

// Outcome of one statistical check. Either p_value or z_score carries the
// decision scale; the other is NaN.
struct TestReport {
    std::string name;
    double statistic = 0;
    double p_value = std::numeric_limits<double>::quiet_NaN();
    double z_score = std::numeric_limits<double>::quiet_NaN();
    bool pass = false;
    std::uint64_t seed = 0;
    std::uint64_t reps = 0;
    std::string note;
};

// Independent replications on streams (seed, rep); reductions run in
// replication order so results do not depend on the worker count.
OceanStats estimate_ocean(const ModelSpec& spec, double G, std::uint64_t reps,
                          std::uint64_t seed, int threads = 1);

// Estimate of P(z,z' in ocean) - P(z in ocean) P(z' in ocean) with a
// delta-method standard error; passes when the estimate exceeds -3 SE.
TestReport fkg_test(const ModelSpec& spec, double z, double zp, std::uint64_t reps,
                    std::uint64_t seed, int threads = 1);

// Kolmogorov-Smirnov test of the scaled centered ocean against the standard
// normal; degenerate models report a note instead of failing.
TestReport clt_test(const ModelSpec& spec, double G, std::uint64_t reps, std::uint64_t seed,
                    int threads = 1);

// Empirical Cov(Theta(s), Theta(t)) versus min(s, t) for every ordered pair in
// the grid; passes when each pair is within 3 SE.
TestReport wiener_covariance_test(const ModelSpec& spec, double G,
                                  const std::vector<double>& grid, std::uint64_t reps,
                                  std::uint64_t seed, int threads = 1);

// Index-of-dispersion checks for the per-point clone / anchored-clone counts.
TestReport count_dispersion_test(const ModelSpec& spec, double x, std::uint64_t reps,
                                 std::uint64_t seed, bool anchored, int threads = 1);

// Samples clones through the right-end parameterization and through the
// derived left-end one, then compares 2-D (left end, length) box counts with
// a two-sample chi-square test.
TestReport left_end_equivalence_test(const ModelSpec& spec, double window,
                                     int position_boxes, int length_boxes, std::uint64_t reps,
                                     std::uint64_t seed, int threads = 1);

}  // namespace ancov
