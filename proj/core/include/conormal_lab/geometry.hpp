#pragma once

#include <complex>
#include <memory>
#include <vector>

#include "conormal_lab/errors.hpp"
#include "conormal_lab/smallvec.hpp"

namespace clab::geometry {

// 2x2 real matrix; unit-determinant elements represent PSL(2,R), acting on
// the upper half-plane by Moebius transformations.
struct Mat2 {
    double a = 1, b = 0, c = 0, d = 1;

    double det() const { return a * d - b * c; }
    Mat2 inverse() const { return {d, -b, -c, a}; }  // valid for det = 1

    friend Mat2 operator*(const Mat2& m, const Mat2& n) {
        return {m.a * n.a + m.b * n.c, m.a * n.b + m.b * n.d,
                m.c * n.a + m.d * n.c, m.c * n.b + m.d * n.d};
    }

    std::complex<double> moebius(std::complex<double> z) const {
        return (a * z + b) / (c * z + d);
    }
    // Derivative of the Moebius action, applied to a tangent vector at z.
    std::complex<double> push_tangent(std::complex<double> z, std::complex<double> v) const {
        std::complex<double> w = c * z + d;
        return v / (w * w);
    }
};

enum class ModelKind { FlatTorus, RoundSphere, HyperbolicSurface };

// One of three exact model geometries. All flows, distances and transports
// have closed forms; no ODE integration anywhere.
class ManifoldModel {
public:
    static ManifoldModel torus(int dim);
    static ManifoldModel sphere(int dim);  // unit S^dim embedded in R^{dim+1}
    static ManifoldModel hyperbolic(const std::vector<Mat2>& generators);
    static ManifoldModel bolza();  // genus-2 regular-octagon surface

    ModelKind kind() const { return kind_; }
    int dim() const { return dim_; }
    // Constant sectional curvature: 0, +1 or -1.
    double curvature() const;
    bool is_hyperbolic() const { return kind_ == ModelKind::HyperbolicSurface; }

    // Generators closed under inversion (hyperbolic only).
    const std::vector<Mat2>& generators() const { return generators_; }
    // Short group words used when minimising over translates; sorted by how
    // far they displace the base point i.
    const std::vector<Mat2>& translates() const { return translates_; }
    const std::vector<double>& translate_displacements() const { return displacements_; }

private:
    ManifoldModel() = default;
    void build_translate_table();

    ModelKind kind_ = ModelKind::FlatTorus;
    int dim_ = 2;
    std::vector<Mat2> generators_;
    std::vector<Mat2> translates_;
    std::vector<double> displacements_;
};

// Unit-cosphere element (x, xi). For the hyperbolic surface the pair is also
// carried as a unit-determinant frame matrix g, which identifies the unit
// tangent bundle with the group quotient; x and xi are derived from g.
struct PhasePoint {
    Vec x;
    Vec xi;
    Mat2 frame;
    bool has_frame = false;
};

// Normal Jacobi data (J, J') along a geodesic; components are the n-1
// directions orthogonal to the flow.
struct TangentPerturbation {
    Vec horizontal;  // J
    Vec vertical;    // J'
};

PhasePoint make_phase_point(const ManifoldModel& model, const Vec& x, const Vec& xi);
PhasePoint hyperbolic_phase_point(const ManifoldModel& model, const Mat2& frame);
// Hyperbolic phase point from half-plane position and direction angle.
PhasePoint hyperbolic_phase_point(const ManifoldModel& model, std::complex<double> z, double angle);

void validate(const ManifoldModel& model, const PhasePoint& rho);  // throws InvalidPhasePoint

// Geodesic flow G^t at unit speed; t is arclength.
PhasePoint flow(const ManifoldModel& model, const PhasePoint& rho, double t);

// Differential of the flow on normal Jacobi data: exact fundamental solution
// of J'' + K J = 0 for K in {0, +1, -1}.
TangentPerturbation dflow(const ManifoldModel& model, const PhasePoint& rho,
                          const TangentPerturbation& v, double t);

double distance(const ManifoldModel& model, const Vec& x, const Vec& y);

// sqrt(base^2 + fiber^2) where the fiber part is the angle between xi1 and
// the parallel transport of xi2 along the minimizing geodesic.
// Throws CutLocus when the transport is ambiguous (antipodal sphere points).
double sasaki_distance(const ManifoldModel& model, const PhasePoint& rho1, const PhasePoint& rho2);

// Parallel transport of a tangent vector at `from` to `to` along the
// minimizing geodesic.
Vec parallel_transport(const ManifoldModel& model, const Vec& from, const Vec& to, const Vec& v);

// --- helpers shared by the submanifold machinery ---

Vec wrap_torus(Vec x);                       // reduce coordinates to [0,1)^n
Mat2 reduce_to_fundamental_domain(const ManifoldModel& model, Mat2 g);  // greedy Dirichlet
std::complex<double> frame_position(const Mat2& g);    // g . i in the half-plane
double frame_angle(const Mat2& g);                     // direction angle of the frame
double halfplane_distance(std::complex<double> z, std::complex<double> w);
// Direction angle at z of the geodesic toward w (half-plane model).
double halfplane_direction(std::complex<double> z, std::complex<double> w);
// Quotient distance from a half-plane point to the orbit of another.
double hyperbolic_quotient_distance(const ManifoldModel& model,
                                    std::complex<double> z, std::complex<double> w);

}  // namespace clab::geometry
