#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "conormal_lab/geometry.hpp"

namespace clab::conormal {

using geometry::ManifoldModel;
using geometry::PhasePoint;
using clab::Vec;

enum class SubmanifoldKind {
    Point,
    ParametricCurve,
    Equator,
    LatitudeCircle,
    TorusCircle,
    TorusGeodesic,
    HyperbolicGeodesicSegment,
    HorocycleSegment,
    GeodesicCircle,
};

// Parametrized closed submanifold H of a model geometry, carrying tangent and
// conormal frames. Curves use a [0,1] parameter domain; a point has none.
class Submanifold {
public:
    static Submanifold point(const ManifoldModel& model, const Vec& x);
    static Submanifold equator(const ManifoldModel& model);
    static Submanifold latitude_circle(const ManifoldModel& model, double psi0);
    static Submanifold torus_circle(const ManifoldModel& model, const Vec& center, double radius);
    // Closed geodesic through `through` in a primitive integer direction.
    static Submanifold torus_geodesic(const ManifoldModel& model, int dir_x, int dir_y,
                                      const Vec& through);
    // Arclength-L segment of the vertical geodesic through i.
    static Submanifold hyperbolic_geodesic(const ManifoldModel& model, double length);
    // Arclength-L segment of the horocycle {Im z = 1} around i.
    static Submanifold horocycle(const ManifoldModel& model, double length);
    // Distance circle around the half-plane base point i.
    static Submanifold geodesic_circle(const ManifoldModel& model, double radius);
    static Submanifold parametric_curve(const ManifoldModel& model,
                                        std::function<Vec(double)> gamma, bool closed);

    const ManifoldModel& model() const { return model_; }
    SubmanifoldKind kind() const { return kind_; }
    int codim() const { return codim_; }
    int dim() const { return model_.dim() - codim_; }
    bool closed() const { return closed_; }

    // Total mass of sigma_H (arclength for curves, 1 for a point).
    double length() const { return length_; }

    Vec at(double u) const;                  // footpoint
    Vec velocity(double u) const;            // gamma'(u)
    Vec acceleration(double u) const;        // gamma''(u)
    Vec unit_tangent(double u) const;
    // Distinguished unit normal nu0; fiber +1 corresponds to +nu0.
    Vec unit_normal(double u) const;

    // Geodesic curvature with respect to the +nu0 orientation; analytic for
    // the named kinds, central differences for ParametricCurve.
    double signed_curvature(double u) const;

    // Conormal covector for a fiber coordinate: curves take fiber = +/-1,
    // a point takes the fiber angle.
    Vec conormal(double u, double fiber) const;
    PhasePoint conormal_point(double u, double fiber) const;

    // Parameter reached after arclength s from u = 0.
    double parameter_at_arclength(double s) const;
    // Parameter of the footpoint closest to x (golden-section refined).
    double nearest_parameter(const Vec& x) const;

    const Vec& base_point() const { return point_; }  // Point kind
    const Vec& circle_center() const { return center_; }
    double radius() const { return radius_; }
    double polar_angle() const { return psi0_; }

private:
    Submanifold() = default;
    void init_curve_geometry();

    ManifoldModel model_ = ManifoldModel::torus(2);
    SubmanifoldKind kind_ = SubmanifoldKind::Point;
    int codim_ = 2;
    bool closed_ = false;
    double length_ = 1.0;

    Vec point_;
    Vec center_;
    double radius_ = 0.0;
    double psi0_ = 0.0;
    double seg_length_ = 1.0;
    int dir_x_ = 1, dir_y_ = 0;
    std::function<Vec(double)> curve_;

    // Cumulative arclength table (non-constant-speed parametrizations).
    bool constant_speed_ = true;
    std::vector<double> cum_length_;
};

enum class MeasureTag { SigmaSNH, Mu, MuH };

struct WeightedSample {
    PhasePoint point;
    double weight = 0.0;
    // Conormal coordinates when the sample lies on SN*H (NaN otherwise).
    double u = 0.0;
    double fiber = 0.0;
};

// Empirical measure: a list of weighted phase points.
struct WeightedSampleSet {
    std::vector<WeightedSample> samples;
    double total_mass = 0.0;
    MeasureTag tag = MeasureTag::Mu;
};

// N conormal samples with base points stratified by arclength and fiber
// directions uniform on the conormal sphere; every weight is total/N.
WeightedSampleSet sample_snh(const Submanifold& H, std::size_t N, std::uint64_t seed);
// Same, restricted to one side of a hypersurface (fiber = +1 or -1).
WeightedSampleSet sample_snh_side(const Submanifold& H, std::size_t N, std::uint64_t seed,
                                  double fiber);

// Normalized Liouville measure on S*M (torus and sphere).
WeightedSampleSet sample_liouville(const ManifoldModel& model, std::size_t N, std::uint64_t seed);
// Lebesgue x delta_direction measure on S*T^n (a plane-wave defect measure).
WeightedSampleSet plane_wave_measure(const ManifoldModel& model, const Vec& direction,
                                     std::size_t N, std::uint64_t seed);

// Geodesic distance to H.
double r_H(const Submanifold& H, const Vec& x);

// |H_p r_H| for p = |xi|^2 - 1, evaluated by one-sided limits of finite
// differences along the Hamiltonian orbit with Richardson extrapolation.
double hp_r(const Submanifold& H, const PhasePoint& rho);

// Nearest element of SN*H in the Sasaki metric.
struct SnhNearest {
    double dist = 0.0;
    double base_dist = 0.0;
    double u = 0.0;
    double fiber = 0.0;
};
SnhNearest snh_nearest(const Submanifold& H, const PhasePoint& rho);
double snh_distance(const Submanifold& H, const PhasePoint& rho);

// Membership of rho in the flow tube spanned by |t| <= T (arclength),
// epsilon-thickened.
bool in_tube(const Submanifold& H, const PhasePoint& rho, double T, double eps);

// Walks the orbit of rho over [t_lo, t_hi] at the given step and refines
// every local approach to the eps-thickened SN*H; approaches closer than eps
// are reported as (t, distance). The callback returns false to stop.
void scan_snh_approaches(const Submanifold& H, const PhasePoint& rho, double t_lo,
                         double t_hi, double step, double eps,
                         const std::function<bool(double, double)>& on_event);

// Product partition of SN*H: uniform parameter bins x uniform fiber bins.
struct CellPartition {
    int param_bins = 64;
    int fiber_bins = 2;

    static CellPartition default_for(const Submanifold& H);
    int cell_count() const { return param_bins * fiber_bins; }
    int cell_of(const Submanifold& H, double u, double fiber) const;
    // Cell center in conormal coordinates.
    void cell_center(const Submanifold& H, int cell, double& u, double& fiber) const;
    double sigma_mass(const Submanifold& H, int cell) const;
};

// Flow-tube average of mu over SN*H cells: mass(A) = mu(tube of A)/(2 t0),
// with t0 in Hamiltonian time and eps-thickened membership.
std::vector<double> flowout_cell_masses(const WeightedSampleSet& mu, const Submanifold& H,
                                        double t0, const CellPartition& cells, double eps);
WeightedSampleSet flowout_measure(const WeightedSampleSet& mu, const Submanifold& H,
                                  double t0, const CellPartition& cells, double eps);

}  // namespace clab::conormal
