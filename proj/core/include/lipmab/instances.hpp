#pragma once

#include <cstdint>
#include <vector>

#include "lipmab/geometry.hpp"
#include "lipmab/instance.hpp"

namespace lipmab {

// mu(x) = mean of coordinates, L = 1/sqrt(d).
Instance linear_instance(int d);

// mu == value. L is a certificate only (any positive value is valid).
Instance constant_instance(int d, double value, double lipschitz = 1.0);

// mu(x) = x/2 + alpha * bump(x), bump triangular of height 1 on
// [0.5 - width, 0.5] peaking at its midpoint. Cells of side 1/2: the
// center ranking prefers cell 1 while the maxima ranking prefers cell 0.
Instance pathology_1d(double alpha = 0.3, double width = 0.05);

struct SpikeInstance {
  Instance instance;
  std::vector<Point> theta;  // spike apex per chosen cell
  double delta = 0.0;        // spike height above the 1/2 baseline
};

// Baseline 1/2 with one cone of height delta = c0 L h / m per chosen cell,
// apex drawn uniformly from an (m+1)^d grid inside the cell. The grid is
// inset by the cone radius so that cones never cross cell faces.
SpikeInstance spike_instance(int d, double h, std::size_t n_players, int m, double c0,
                             const std::vector<std::size_t>& chosen_cells, double lipschitz,
                             std::uint64_t seed);

// Candidate apex grid of one spike cell (exposed for oracles).
std::vector<Point> spike_grid(const Box& cell, int m, double inset);

// max(base, cones) with seeded apexes, heights and slopes. Range stays
// inside [0.05, 0.95] by construction.
Instance random_cone_instance(int d, int n_cones, std::uint64_t seed);

// Rebuilds any of the above from its recorded spec.
Instance make_instance(const InstanceSpec& spec);

}  // namespace lipmab
