#pragma once

#include <iosfwd>
#include <utility>
#include <vector>

#include "ancov/model.hpp"
#include "ancov/rng.hpp"

namespace ancov {

// One clone: right end plus length, covering [right_end - length, right_end].
struct Clone {
    double right_end;
    double length;
};

// Sampled clone configuration; entries sorted by right end.
struct CloneSet {
    std::vector<Clone> entries;
    double region_lo = 0, region_hi = 0;  // right ends were drawn on [lo, hi]
};

// Sampled anchor positions, sorted.
struct AnchorSet {
    std::vector<double> positions;
    double region_lo = 0, region_hi = 0;
};

// Disjoint maximal intervals covered by anchored clones, sorted,
// with strict gaps between consecutive intervals.
struct IslandSet {
    std::vector<std::pair<double, double>> intervals;
};

// Padding that makes windowed sampling exact up to probability epsilon:
// the support bound for bounded laws, the (1-epsilon)-quantile otherwise,
// maximized over positions.
double pad_width(const ModelSpec& spec, double epsilon);

// Clone right ends on [0, G + pad] as a Poisson process of the clone
// intensity; each length drawn from the law at its right end.
CloneSet sample_clones(const ModelSpec& spec, double G, double pad, RngStream& rng);

// Anchors on [-pad, G + pad].
AnchorSet sample_anchors(const ModelSpec& spec, double G, double pad, RngStream& rng);

// Clones whose (closed) interval contains at least one anchor.
CloneSet anchored_clones(const CloneSet& clones, const AnchorSet& anchors);

// Maximal connected unions of the given clone intervals; touching intervals merge.
IslandSet islands(const CloneSet& anchored);

// Measure of [a, b] minus its overlap with the islands.
double ocean_measure(const IslandSet& isl, double a, double b);

// Number of clones covering x; anchored variant restricts to anchored clones.
std::size_t count_covering(const CloneSet& clones, double x);
std::size_t count_anchored_covering(const CloneSet& clones, const AnchorSet& anchors, double x);

// One realization of the centered, scaled ocean path: for each t in grid,
// (O_{Gt} - rho*G*t) / sqrt(nu*G). Requires a homogeneous spec and nu > 0.
std::vector<double> theta_path(const ModelSpec& spec, double G, const std::vector<double>& grid,
                               double rho, double nu, RngStream& rng);

// CSV export of a realization (one file each; headers included).
void write_clones_csv(std::ostream& os, const CloneSet& clones);
void write_anchors_csv(std::ostream& os, const AnchorSet& anchors);
void write_islands_csv(std::ostream& os, const IslandSet& isl);

}  // namespace ancov
