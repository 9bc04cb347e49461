#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "conormal_lab/conormal.hpp"

namespace clab::dynamics {

using conormal::Submanifold;
using conormal::WeightedSampleSet;
using geometry::ManifoldModel;
using geometry::PhasePoint;
using clab::Vec;

struct ReturnEvent {
    double t = 0.0;               // elapsed arclength, > 0
    PhasePoint rho_out;           // eps-closest point of the crossing
    double miss_distance = 0.0;   // Sasaki distance to SN*H at the event
};

// First positive time at which the orbit of rho re-enters the eps-thickened
// SN*H; local minima of the Sasaki distance are bracketed on an eps/4 grid
// and refined by golden section.
std::optional<ReturnEvent> first_return(const Submanifold& H, const PhasePoint& rho,
                                        double T_max, double eps, bool backward = false);

// Iterated return map, up to k_max events or cumulative time T_max.
std::vector<ReturnEvent> return_orbit(const Submanifold& H, const PhasePoint& rho,
                                      int k_max, double T_max, double eps,
                                      bool backward = false);

// Per-sample distance of the closest self-return among return events within
// time T, in both time directions (infinity when no event qualifies).
struct RecurrenceProfile {
    std::vector<double> d_forward;
    std::vector<double> d_backward;
    std::vector<double> weights;
    double total_weight = 0.0;

    // sigma-weighted fraction with both one-sided distances below eps.
    double fraction(double eps) const;
};
RecurrenceProfile recurrence_profile(const Submanifold& H, std::size_t N, double T,
                                     double eps_detect, std::uint64_t seed);

// sigma_{SN*H}-weighted fraction of (eps, T)-recurrent conormal directions.
double recurrence_fraction(const Submanifold& H, std::size_t N, double T, double eps,
                           std::uint64_t seed);

// Stable/unstable lines in Jacobi coordinates (J, J'), found by power
// iteration on the flow differential over +/- T_horizon.
struct StableSplitting {
    std::array<double, 2> e_plus;   // most contracted under backward flow
    std::array<double, 2> e_minus;  // most contracted under forward flow
};
StableSplitting stable_subspaces(const ManifoldModel& model, const PhasePoint& rho,
                                 double T_horizon);

struct SplittingReport {
    int m_plus = 0;
    int m_minus = 0;
    bool in_mixed = false;
    bool in_split = false;
    bool in_A = false;
    bool in_N = false;
    double residual = 0.0;  // smallest angular defect against E_+ / E_-
};

// Classifies T_rho(SN*H) against the stable/unstable lines; the tangent line
// in Jacobi coordinates is span{(1, -kappa)} for the sample's conormal
// orientation.
SplittingReport classify_splitting(const Submanifold& H, const PhasePoint& rho,
                                   double tol = 1e-4);

// Weighted average of |det J_t| over A, where J_t maps the conormal frame of
// SN*H to the flowed-out footprint: the volume distortion of H_t.
double volume_growth(const Submanifold& H, const WeightedSampleSet& A, double t);

struct IntegrabilityReport {
    double integral_forward = 0.0;        // integral of the mean |det J_t|
    double integral_backward = 0.0;
    double volume_integral_forward = 0.0;  // scaled by the mass of A
    double volume_integral_backward = 0.0;
    double tail_slope_forward = 0.0;
    double tail_slope_backward = 0.0;
    bool certified_forward = false;
    bool certified_backward = false;
    std::string verdict;
};

// Trapezoid integral of the volume growth over [0, T_max] and [-T_max, 0].
// "certified" requires a decaying log-tail and a negligible extrapolated
// tail mass; forward integrability controls backward-infinite loops.
IntegrabilityReport integrability_report(const Submanifold& H, const WeightedSampleSet& A,
                                         double T_max, double quad_step);

// Base-point projections of G^t applied to N conormal samples: a point cloud
// on H_t (geodesic spheres when H is a point).
std::vector<Vec> flow_submanifold(const Submanifold& H, double t, std::size_t N);

// Fraction of sample orbits that re-enter the eps-ball (Sasaki) of their own
// start within time T.
double self_recurrence_fraction(const ManifoldModel& model, const WeightedSampleSet& start,
                                double T, double eps);

}  // namespace clab::dynamics
