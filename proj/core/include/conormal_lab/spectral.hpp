#pragma once

#include <complex>
#include <functional>
#include <span>
#include <vector>

#include "conormal_lab/conormal.hpp"

namespace clab::spectral {

using conormal::Submanifold;
using geometry::ManifoldModel;
using clab::Vec;

enum class ModeKind { TorusPlaneWave, SphereZonal, SphereSectoral };

// Explicit L^2-normalized Laplace eigenfunction with semiclassical parameter
// h = 1/sqrt(lambda).
class EigenMode {
public:
    static EigenMode plane_wave(const ManifoldModel& model, const std::vector<int>& m);
    static EigenMode zonal(const ManifoldModel& model, int l);     // axis +e3
    static EigenMode sectoral(const ManifoldModel& model, int l);  // axis +e3

    ModeKind kind() const { return kind_; }
    double h() const { return h_; }
    int degree() const { return degree_; }
    const std::vector<int>& lattice_vector() const { return m_; }

    std::complex<double> eval(const Vec& x) const;
    // h times the derivative along the unit tangent direction nu at x.
    std::complex<double> h_directional_derivative(const Vec& x, const Vec& nu) const;

private:
    EigenMode() = default;

    ModeKind kind_ = ModeKind::TorusPlaneWave;
    double h_ = 1.0;
    int degree_ = 0;
    std::vector<int> m_;
    double norm_const_ = 1.0;
};

// Parameter subinterval of H; a list of intervals describes A.
struct Interval {
    double a = 0.0;
    double b = 1.0;
};

using Weight = std::function<double(double)>;  // smooth weight on the parameter domain

inline double unit_weight(double) { return 1.0; }
inline std::span<const Interval> full_domain() {
    static const Interval full[1] = {{0.0, 1.0}};
    return {full, 1};
}

// Composite Gauss-Legendre quadrature of w * phi_h over A with the arclength
// Jacobian; panel count scales with 1/h and node doubling must agree to 1e-8
// relative, else QuadratureNotConverged.
std::complex<double> average(const Submanifold& H, std::span<const Interval> A,
                             const Weight& w, const EigenMode& mode);

// Same quadrature applied to h d_nu phi_h for a hypersurface, with nu = +nu0.
std::complex<double> normal_average(const Submanifold& H, std::span<const Interval> A,
                                    const Weight& w, const EigenMode& mode);

// Number of quadrature nodes the converged pass uses for a given h.
int average_node_count(const Submanifold& H, std::span<const Interval> A, double h);

struct ScalingReport {
    double alpha = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    std::vector<double> h_values;
    std::vector<double> abs_values;
    std::vector<double> residuals;
    int n_dropped = 0;
};

// Least-squares fit of log|value| against log h over a mode family;
// parity-forced zeros are dropped and counted.
ScalingReport sweep_and_fit(const Submanifold& H, std::span<const Interval> A, const Weight& w,
                            const std::vector<EigenMode>& family, bool use_normal);

// Fit alone, for synthetic sequences.
ScalingReport fit_power_law(const std::vector<double>& h, const std::vector<double>& values);

}  // namespace clab::spectral
