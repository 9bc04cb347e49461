#pragma once

#include <complex>
#include <functional>
#include <vector>

#include "conormal_lab/conormal.hpp"
#include "conormal_lab/spectral.hpp"

namespace clab::semiclassical {

using conormal::CellPartition;
using conormal::Submanifold;
using conormal::WeightedSampleSet;
using geometry::ManifoldModel;
using clab::Vec;

// Smooth symbol a(x, xi), compactly supported in xi.
struct Symbol {
    std::function<std::complex<double>(const Vec& x, const Vec& xi)> eval;
    double support_radius = 2.0;  // |xi| bound of the support
    double sup_bound = 1.0;
};

// Smooth bump supported on [center - width, center + width], equal to 1 at
// the center; used for radial shells in xi.
double radial_bump(double r, double center, double width);

using Grid = std::vector<std::complex<double>>;  // row-major G x G values on the torus

Grid mode_grid(const spectral::EigenMode& mode, int G);

// Standard quantization Op_h(a) applied to a grid function on T^2: Fourier
// transform, multiply mode m by a(x, 2 pi h m), sum over retained modes.
Grid quantize_apply(const Symbol& a, double h, const Grid& u, int G);

struct PairingSequence {
    std::vector<std::complex<double>> values;  // <Op_h(a) phi_h, phi_h> per mode
    std::complex<double> limit;                // Richardson estimate over the h sequence
};
PairingSequence defect_pairing(const Symbol& a, const std::vector<spectral::EigenMode>& family,
                               int G);

struct MuEstimateOptions {
    int grid = 256;          // quantization grid
    int x_cells = 4;         // x-cell count per axis
    int angle_bins = 16;     // direction bins on the cosphere fiber
    int max_x_mode = 2;      // spatial Fourier modes in the symbol basis
    int max_angle_mode = 8;  // angular Fourier modes in the symbol basis
    std::size_t n_samples = 100000;
    std::uint64_t seed = 0;
};

// Weak-star estimate of the defect measure of a plane-wave family on S*T^2:
// pairings against a symbol basis, nonnegative least squares for cell
// masses, cells expanded into stratified samples.
WeightedSampleSet estimate_defect_measure(const std::vector<spectral::EigenMode>& family,
                                          const MuEstimateOptions& opts);

struct BoundCheckOptions {
    MuEstimateOptions mu;
    double t0 = 0.05;
    double eps = 0.02;  // tube membership thickness
};

struct BoundCheckReport {
    std::vector<double> h_values;
    std::vector<double> lhs;      // h^{(k-1)/2} |avg| per mode
    double rhs = 0.0;             // integral of |w| sqrt(f / |H_p r_H|) over the cells
    double ratio_max = 0.0;
    std::vector<double> f_cells;  // flowout density against sigma per cell
    double mu_H_mass = 0.0;
    bool singular_only = false;
    double lhs_tail = 0.0;        // last LHS value; the report target when singular
};

// Two-sided evaluation of the average bound: LHS from quadrature averages,
// RHS assembled from the estimated defect measure flowed onto SN*H.
BoundCheckReport bound_check(const Submanifold& H, std::span<const spectral::Interval> A,
                             const spectral::Weight& w,
                             const std::vector<spectral::EigenMode>& family,
                             const CellPartition& cells, const BoundCheckOptions& opts);

}  // namespace clab::semiclassical
