#pragma once

#include <cstddef>
#include <vector>

#include "conormal_lab/smallvec.hpp"

namespace clab::fractal {

// Finite point cloud in [0,1]^d standing in for the boundary of a parameter
// set; the generator depth documents the finest resolved scale.
struct BoundarySet {
    std::vector<Vec> points;
    int ambient_dim = 1;
    int generator_depth = 30;  // resolves scales down to 2^-depth
};

BoundarySet interval_endpoints(const std::vector<double>& endpoints);
BoundarySet cantor_middle_thirds(int depth);
// Uniformly sampled segment [a,b] x {0} inside a d-dimensional cube.
BoundarySet segment(double a, double b, std::size_t n_points, int ambient_dim);

struct BoxDimensionFit {
    double estimate = 0.0;
    double r_squared = 0.0;
    std::vector<int> levels;            // dyadic scales eps_j = 2^-j
    std::vector<std::size_t> counts;    // occupied boxes per scale
};

// Slope of log N(eps_j) against log(1/eps_j) over origin-anchored dyadic
// boxes, j in [j_min, j_max].
BoxDimensionFit box_dimension(const BoundarySet& B, int j_min, int j_max);

struct Admissibility {
    bool admissible = false;
    double slack = 0.0;  // n - k - 1/2 - estimate
};

// Test of dim_box(boundary) < n - k - 1/2 with a safety margin on the fit.
Admissibility admissible(const BoxDimensionFit& fit, int n, int k, double margin = 0.03);

}  // namespace clab::fractal
