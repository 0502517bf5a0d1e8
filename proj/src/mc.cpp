#include "ancov/mc.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <thread>

#include "ancov/stats.hpp"

namespace ancov {

namespace {

constexpr double kPadEpsilon = 1e-9;

// Streams per replication: slot 0 clones, slot 1 anchors, slots 2-3 spare.
RngStream rep_stream(std::uint64_t seed, std::uint64_t rep, std::uint64_t slot) {
    return RngStream(seed, rep * 4 + slot);
}

void parallel_reps(std::uint64_t reps, int threads,
                   const std::function<void(std::uint64_t)>& body) {
    threads = std::max(threads, 1);
    if (threads == 1 || reps < 2) {
        for (std::uint64_t r = 0; r < reps; ++r) body(r);
        return;
    }
    std::vector<std::thread> pool;
    std::uint64_t chunk = (reps + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
        std::uint64_t lo = t * chunk, hi = std::min(reps, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &body] {
            for (std::uint64_t r = lo; r < hi; ++r) body(r);
        });
    }
    for (auto& th : pool) th.join();
}

IslandSet one_island_realization(const ModelSpec& spec, double G, double pad,
                                 std::uint64_t seed, std::uint64_t rep) {
    RngStream crng = rep_stream(seed, rep, 0);
    RngStream arng = rep_stream(seed, rep, 1);
    CloneSet clones = sample_clones(spec, G, pad, crng);
    AnchorSet anchors = sample_anchors(spec, G, pad, arng);
    return islands(anchored_clones(clones, anchors));
}

}  // namespace

OceanStats estimate_ocean(const ModelSpec& spec, double G, std::uint64_t reps,
                          std::uint64_t seed, int threads) {
    if (reps < 2) throw std::invalid_argument("estimate_ocean: need reps >= 2");
    double pad = pad_width(spec, kPadEpsilon);
    std::vector<double> ocean(reps);
    parallel_reps(reps, threads, [&](std::uint64_t r) {
        ocean[r] = ocean_measure(one_island_realization(spec, G, pad, seed, r), 0.0, G);
    });

    // fixed-order reduction; central sums by a second pass for stable moments
    double mean = 0;
    for (double o : ocean) mean += o;
    mean /= static_cast<double>(reps);
    double c2 = 0, c3 = 0, c4 = 0, c6 = 0;
    for (double o : ocean) {
        double d = o - mean, d2 = d * d;
        c2 += d2;
        c3 += d2 * d;
        c4 += d2 * d2;
        c6 += d2 * d2 * d2;
    }
    double n = static_cast<double>(reps);
    double m2 = c2 / n, m3 = c3 / n, m4 = c4 / n, m6 = c6 / n;

    OceanStats st;
    st.reps = reps;
    st.G = G;
    st.seed = seed;
    st.mean = mean;
    st.variance = c2 / (n - 1);
    st.third_central = m3 * n * n / ((n - 1) * (n - 2));
    st.se_mean = std::sqrt(std::max(st.variance, 0.0) / n);
    double var_of_var = (m4 - m2 * m2 * (n - 3) / (n - 1)) / n;
    st.se_variance = std::sqrt(std::max(var_of_var, 0.0));
    double var_of_third = (m6 - m3 * m3 - 6.0 * m2 * m4 + 9.0 * m2 * m2 * m2) / n;
    st.se_third = std::sqrt(std::max(var_of_third, 0.0));
    return st;
}

TestReport fkg_test(const ModelSpec& spec, double z, double zp, std::uint64_t reps,
                    std::uint64_t seed, int threads) {
    if (reps < 1000) throw std::invalid_argument("fkg_test: need reps >= 1e3");
    if (z > zp) std::swap(z, zp);
    if (z < 0) throw std::invalid_argument("fkg_test: points must be >= 0");
    double G = std::max(zp, 1e-6);
    double pad = pad_width(spec, kPadEpsilon);
    std::vector<std::uint8_t> iz(reps), izp(reps);
    parallel_reps(reps, threads, [&](std::uint64_t r) {
        IslandSet isl = one_island_realization(spec, G, pad, seed, r);
        auto in_ocean = [&](double pt) {
            for (auto& [lo, hi] : isl.intervals)
                if (lo <= pt && pt <= hi) return false;
            return true;
        };
        iz[r] = in_ocean(z) ? 1 : 0;
        izp[r] = in_ocean(zp) ? 1 : 0;
    });

    double n = static_cast<double>(reps);
    double p1 = 0, p2 = 0, p11 = 0;
    for (std::uint64_t r = 0; r < reps; ++r) {
        p1 += iz[r];
        p2 += izp[r];
        p11 += iz[r] & izp[r];
    }
    p1 /= n;
    p2 /= n;
    p11 /= n;
    double diff = p11 - p1 * p2;

    // delta method on (p11, p1, p2) with multinomial covariances
    double g[3] = {1.0, -p2, -p1};
    double cov[3][3];
    cov[0][0] = p11 * (1 - p11);
    cov[1][1] = p1 * (1 - p1);
    cov[2][2] = p2 * (1 - p2);
    cov[0][1] = cov[1][0] = p11 * (1 - p1);
    cov[0][2] = cov[2][0] = p11 * (1 - p2);
    cov[1][2] = cov[2][1] = p11 - p1 * p2;
    double var = 0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) var += g[i] * g[j] * cov[i][j];
    double se = std::sqrt(std::max(var, 1e-300) / n);

    TestReport rep;
    rep.name = "fkg";
    rep.statistic = diff;
    rep.z_score = diff / se;
    rep.pass = diff > -3.0 * se;
    rep.seed = seed;
    rep.reps = reps;
    return rep;
}

namespace {

bool degenerate_ocean(const ModelSpec& spec) {
    return spec.clones.is_zero() || spec.anchors.is_zero() ||
           spec.lengths.support_top_sup() == 0;
}

std::vector<std::vector<double>> theta_paths(const ModelSpec& spec, double G,
                                             const std::vector<double>& grid,
                                             std::uint64_t reps, std::uint64_t seed,
                                             int threads, double rho, double nu) {
    std::vector<std::vector<double>> paths(reps);
    parallel_reps(reps, threads, [&](std::uint64_t r) {
        RngStream rng = rep_stream(seed, r, 0);
        paths[r] = theta_path(spec, G, grid, rho, nu, rng);
    });
    return paths;
}

}  // namespace

TestReport clt_test(const ModelSpec& spec, double G, std::uint64_t reps, std::uint64_t seed,
                    int threads) {
    TestReport rep;
    rep.name = "clt_ks";
    rep.seed = seed;
    rep.reps = reps;
    if (degenerate_ocean(spec)) {
        rep.pass = true;
        rep.note = "degenerate model: ocean is deterministic";
        rep.statistic = 0;
        return rep;
    }
    auto analysis = two_point_analysis(as_homogeneous(spec));
    double rho = analysis->rho();
    double nu = analysis->constants().nu();
    auto paths = theta_paths(spec, G, {1.0}, reps, seed, threads, rho, nu);
    std::vector<double> values(reps);
    for (std::uint64_t r = 0; r < reps; ++r) values[r] = paths[r][0];
    std::sort(values.begin(), values.end());
    std::vector<double> cdf(reps);
    for (std::uint64_t r = 0; r < reps; ++r) cdf[r] = normal_cdf(values[r]);
    rep.statistic = ks_statistic(cdf);
    rep.p_value = ks_p_value(rep.statistic, reps);
    rep.pass = rep.p_value > 0.01;
    return rep;
}

TestReport wiener_covariance_test(const ModelSpec& spec, double G,
                                  const std::vector<double>& grid, std::uint64_t reps,
                                  std::uint64_t seed, int threads) {
    TestReport rep;
    rep.name = "wiener_covariance";
    rep.seed = seed;
    rep.reps = reps;
    for (double t : grid)
        if (!(t > 0 && t <= 1))
            throw std::invalid_argument("wiener_covariance_test: grid must lie in (0,1]");
    if (degenerate_ocean(spec)) {
        rep.pass = true;
        rep.note = "degenerate model: ocean is deterministic";
        return rep;
    }
    auto analysis = two_point_analysis(as_homogeneous(spec));
    double rho = analysis->rho();
    double nu = analysis->constants().nu();
    auto paths = theta_paths(spec, G, grid, reps, seed, threads, rho, nu);

    double n = static_cast<double>(reps);
    double worst = 0;
    bool all_pass = true;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        for (std::size_t j = i; j < grid.size(); ++j) {
            double target = std::min(grid[i], grid[j]);
            double sx = 0, sy = 0, sxy = 0, sxy2 = 0;
            for (std::uint64_t r = 0; r < reps; ++r) {
                double x = paths[r][i], y = paths[r][j];
                sx += x;
                sy += y;
                sxy += x * y;
                sxy2 += x * y * x * y;
            }
            double mx = sx / n, my = sy / n;
            double cov = sxy / n - mx * my;
            double var_prod = sxy2 / n - (sxy / n) * (sxy / n);
            double se = std::sqrt(std::max(var_prod, 1e-300) / n);
            double zscore = (cov - target) / se;
            worst = std::max(worst, std::abs(zscore));
            if (std::abs(zscore) > 3.0) all_pass = false;
        }
    }
    rep.statistic = worst;
    rep.z_score = worst;
    rep.pass = all_pass;
    return rep;
}

TestReport count_dispersion_test(const ModelSpec& spec, double x, std::uint64_t reps,
                                 std::uint64_t seed, bool anchored, int threads) {
    if (reps < 10000) throw std::invalid_argument("count_dispersion_test: need reps >= 1e4");
    TestReport rep;
    rep.name = anchored ? "dispersion_anchored" : "dispersion_clone";
    rep.seed = seed;
    rep.reps = reps;
    if (x < 0) throw std::invalid_argument("count_dispersion_test: x must be >= 0");

    double G = x + 1.0;
    double pad = pad_width(spec, kPadEpsilon);
    std::vector<double> counts(reps);
    parallel_reps(reps, threads, [&](std::uint64_t r) {
        RngStream crng = rep_stream(seed, r, 0);
        RngStream arng = rep_stream(seed, r, 1);
        CloneSet clones = sample_clones(spec, G, pad, crng);
        AnchorSet anchors = sample_anchors(spec, G, pad, arng);
        counts[r] = anchored
                        ? static_cast<double>(count_anchored_covering(clones, anchors, x))
                        : static_cast<double>(count_covering(clones, x));
    });

    double n = static_cast<double>(reps);
    double mean = 0;
    for (double c : counts) mean += c;
    mean /= n;
    if (mean == 0) {
        rep.pass = true;
        rep.note = "inconclusive: mean count is zero";
        return rep;
    }
    double c2 = 0, c3 = 0, c4 = 0;
    for (double c : counts) {
        double d = c - mean, d2 = d * d;
        c2 += d2;
        c3 += d2 * d;
        c4 += d2 * d2;
    }
    double var = c2 / (n - 1);
    double m2 = c2 / n, m3 = c3 / n, m4 = c4 / n;

    if (!anchored) {
        double ratio = var / mean;
        double se = std::sqrt(2.0 / (n - 1));
        rep.statistic = ratio;
        rep.z_score = (ratio - 1.0) / se;
        rep.pass = std::abs(ratio - 1.0) <= 3.0 * se;
        return rep;
    }
    double diff = var - mean;
    double var_var = (m4 - m2 * m2 * (n - 3) / (n - 1)) / n;
    double var_mean = m2 / n;
    double cov_vm = m3 / n;
    double se = std::sqrt(std::max(var_var + var_mean - 2.0 * cov_vm, 1e-300));
    rep.statistic = diff;
    rep.z_score = diff / se;
    rep.pass = diff > 3.0 * se;
    return rep;
}

namespace {

// Left-end clone sampler: thin candidate left ends against the sup clone rate
// (the transported intensity never exceeds it), then draw the transported
// length law at each accepted left end.
std::vector<Clone> sample_left_param(const ModelSpec& spec, double window,
                                     const QuadConfig& quad, RngStream& rng) {
    std::vector<Clone> out;
    double bound = spec.clones.sup_rate();
    if (bound <= 0) return out;

    const auto& lens = spec.lengths;
    std::vector<const LengthLaw*> continuous;
    for (auto& l : lens.laws())
        if (!l.is_discrete()) continuous.push_back(&l);

    double y = 0;
    for (;;) {
        y += rng.exponential(bound);
        if (y >= window) break;
        double cprime = left_end_intensity(spec, y, quad);
        if (rng.uniform() * bound > cprime) continue;

        // transported law at y: discrete part first
        double discrete_mass = 0;
        std::vector<std::pair<double, double>> datoms;  // (t, weight)
        auto piece_lo = [&](std::size_t i) {
            return i == 0 ? -kInf : lens.breakpoints()[i - 1];
        };
        auto piece_hi = [&](std::size_t i) {
            return i + 1 == lens.laws().size() ? kInf : lens.breakpoints()[i];
        };
        for (std::size_t i = 0; i < lens.laws().size(); ++i) {
            for (auto& [t, p] : lens.laws()[i].atom_list()) {
                double xpos = y + t;
                if (xpos > piece_lo(i) && xpos <= piece_hi(i)) {
                    double w = p * spec.clones.rate_at(xpos);
                    datoms.push_back({t, w});
                    discrete_mass += w;
                }
            }
        }
        double u = rng.uniform() * cprime;
        if (u < discrete_mass) {
            double acc = 0;
            for (auto& [t, w] : datoms) {
                acc += w;
                if (u <= acc) {
                    out.push_back({y + t, t});
                    break;
                }
            }
            continue;
        }
        // continuous part by rejection against the mixture of continuous laws
        if (continuous.empty()) continue;  // numerical sliver; drop
        for (int attempt = 0; attempt < 100000; ++attempt) {
            std::size_t k = static_cast<std::size_t>(rng.uniform() * continuous.size());
            k = std::min(k, continuous.size() - 1);
            const LengthLaw* prop = continuous[k];
            double t;
            switch (prop->kind()) {
                case LengthLaw::Kind::Exponential:
                    t = rng.exponential(1.0 / prop->param1());
                    break;
                default:
                    t = rng.uniform(prop->param1(), prop->param2());
                    break;
            }
            double denom = 0;
            for (auto* l : continuous) denom += l->density(t);
            if (denom <= 0) continue;
            double target = spec.clones.rate_at(y + t) * lens.at(y + t).density(t);
            if (rng.uniform() * bound * denom <= target) {
                out.push_back({y + t, t});
                break;
            }
        }
    }
    return out;
}

}  // namespace

TestReport left_end_equivalence_test(const ModelSpec& spec, double window, int position_boxes,
                                     int length_boxes, std::uint64_t reps, std::uint64_t seed,
                                     int threads) {
    TestReport rep;
    rep.name = "left_end_equivalence";
    rep.seed = seed;
    rep.reps = reps;
    if (spec.clones.kind() == IntensityMeasure::Kind::Density)
        rep.note = "density intensity: transported rate evaluated by quadrature";
    if (position_boxes < 1 || length_boxes < 1)
        throw std::invalid_argument("left_end_equivalence_test: need at least one box");

    QuadConfig quad;
    double pad = pad_width(spec, kPadEpsilon);
    double length_top = std::min(spec.lengths.quantile_sup(1.0 - 1e-6) * 1.5 + 1e-9, 1e9);

    std::vector<std::vector<double>> ca(reps), cb(reps);
    int nbox = position_boxes * length_boxes;
    auto box_of = [&](double le, double t) {
        int bx = std::min(static_cast<int>(le / window * position_boxes), position_boxes - 1);
        int bt = std::min(static_cast<int>(t / length_top * length_boxes), length_boxes - 1);
        return bx * length_boxes + bt;
    };
    parallel_reps(reps, threads, [&](std::uint64_t r) {
        ca[r].assign(nbox, 0.0);
        cb[r].assign(nbox, 0.0);
        RngStream right_rng = rep_stream(seed, r, 0);
        CloneSet right = sample_clones(spec, window, pad, right_rng);
        for (const Clone& c : right.entries) {
            double le = c.right_end - c.length;
            if (le >= 0 && le < window && c.length < length_top)
                ca[r][box_of(le, c.length)] += 1.0;
        }
        RngStream left_rng = rep_stream(seed, r, 2);
        for (const Clone& c : sample_left_param(spec, window, quad, left_rng)) {
            double le = c.right_end - c.length;
            if (le >= 0 && le < window && c.length < length_top)
                cb[r][box_of(le, c.length)] += 1.0;
        }
    });

    std::vector<double> total_a(nbox, 0.0), total_b(nbox, 0.0);
    for (std::uint64_t r = 0; r < reps; ++r)
        for (int b = 0; b < nbox; ++b) {
            total_a[b] += ca[r][b];
            total_b[b] += cb[r][b];
        }

    double sum = 0;
    for (int b = 0; b < nbox; ++b) sum += total_a[b] + total_b[b];
    if (sum == 0) {
        rep.pass = true;
        rep.p_value = 1.0;
        rep.note = "both samplers empty";
        return rep;
    }
    ChiSquareResult cs = chi_square_two_sample(total_a, total_b);
    rep.statistic = cs.statistic;
    rep.p_value = cs.p_value;
    rep.pass = cs.p_value > 0.01;
    return rep;
}

}  // namespace ancov
