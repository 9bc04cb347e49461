#include "conormal_lab/conormal.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>

#include "conormal_lab/rng.hpp"

namespace clab::conormal {

using geometry::flow;
using geometry::hyperbolic_phase_point;
using geometry::make_phase_point;
using geometry::Mat2;
using geometry::ModelKind;
using geometry::PhasePoint;
using geometry::sasaki_distance;
using geometry::wrap_torus;

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr double kFdStep = 1e-5;  // central-difference step for parametric curves

double wrap01(double x) {
    double r = x - std::floor(x);
    return r >= 1.0 ? 0.0 : r;
}

double wrap_unit_dist(double x) {  // distance of x to the nearest integer
    double r = std::abs(x - std::round(x));
    return r;
}

std::complex<double> as_complex(const Vec& v) { return {v[0], v[1]}; }

Vec from_complex(std::complex<double> z) { return Vec{z.real(), z.imag()}; }

double sphere_volume(int d) {
    switch (d) {
        case 0: return 2.0;        // counting measure on two points
        case 1: return 2.0 * kPi;
        case 2: return 4.0 * kPi;
        default: {
            double v = 2.0 * kPi;
            for (int k = 2; k <= d; ++k) v *= 2.0 * kPi / (k - 1);  // rough; d <= 2 in practice
            return v;
        }
    }
}

// Golden-section minimization on [a, b]; f need not be smooth at the ends.
template <typename F>
double golden_min(F&& f, double a, double b, double tol = 1e-12) {
    const double gr = 0.6180339887498949;
    double x1 = b - gr * (b - a);
    double x2 = a + gr * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while (b - a > tol) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = f(x2);
        }
    }
    return 0.5 * (a + b);
}

}  // namespace

// --- factories ---

Submanifold Submanifold::point(const ManifoldModel& model, const Vec& x) {
    Submanifold h;
    h.model_ = model;
    h.kind_ = SubmanifoldKind::Point;
    h.codim_ = model.dim();
    h.closed_ = true;
    h.length_ = 1.0;
    h.point_ = x;
    if (model.kind() == ModelKind::FlatTorus) h.point_ = wrap_torus(h.point_);
    if (model.kind() == ModelKind::RoundSphere &&
        std::abs(x.squared_norm() - 1.0) > 1e-10)
        throw Error("sphere point must have unit norm");
    if (model.kind() == ModelKind::HyperbolicSurface && !(x[1] > 0))
        throw Error("hyperbolic point must lie in the upper half-plane");
    return h;
}

Submanifold Submanifold::equator(const ManifoldModel& model) {
    if (model.kind() != ModelKind::RoundSphere || model.dim() != 2)
        throw ModelMismatch("equator is defined on S^2");
    Submanifold h;
    h.model_ = model;
    h.kind_ = SubmanifoldKind::Equator;
    h.codim_ = 1;
    h.closed_ = true;
    h.length_ = 2.0 * kPi;
    return h;
}

Submanifold Submanifold::latitude_circle(const ManifoldModel& model, double psi0) {
    if (model.kind() != ModelKind::RoundSphere || model.dim() != 2)
        throw ModelMismatch("latitude circles are defined on S^2");
    if (psi0 <= 0.0 || psi0 >= kPi) throw Error("polar angle must lie in (0, pi)");
    if (std::sin(psi0) < 1e-10) throw DegenerateImmersion("latitude circle has zero length");
    Submanifold h;
    h.model_ = model;
    h.kind_ = SubmanifoldKind::LatitudeCircle;
    h.codim_ = 1;
    h.closed_ = true;
    h.psi0_ = psi0;
    h.length_ = 2.0 * kPi * std::sin(psi0);
    return h;
}

Submanifold Submanifold::torus_circle(const ManifoldModel& model, const Vec& center,
                                      double radius) {
    if (model.kind() != ModelKind::FlatTorus || model.dim() != 2)
        throw ModelMismatch("torus circles are defined on T^2");
    if (radius < 1e-10) throw DegenerateImmersion("circle radius is zero");
    if (radius >= 0.5) throw Error("torus circle must embed; radius < 1/2");
    Submanifold h;
    h.model_ = model;
    h.kind_ = SubmanifoldKind::TorusCircle;
    h.codim_ = 1;
    h.closed_ = true;
    h.center_ = center;
    h.radius_ = radius;
    h.length_ = 2.0 * kPi * radius;
    return h;
}

Submanifold Submanifold::torus_geodesic(const ManifoldModel& model, int dir_x, int dir_y,
                                        const Vec& through) {
    if (model.kind() != ModelKind::FlatTorus || model.dim() != 2)
        throw ModelMismatch("torus geodesics are defined on T^2");
    if (dir_x == 0 && dir_y == 0) throw Error("direction must be a nonzero lattice vector");
    if (std::gcd(std::abs(dir_x), std::abs(dir_y)) != 1)
        throw Error("direction must be a primitive lattice vector");
    Submanifold h;
    h.model_ = model;
    h.kind_ = SubmanifoldKind::TorusGeodesic;
    h.codim_ = 1;
    h.closed_ = true;
    h.dir_x_ = dir_x;
    h.dir_y_ = dir_y;
    h.center_ = wrap_torus(through);
    h.length_ = std::hypot(double(dir_x), double(dir_y));
    return h;
}

Submanifold Submanifold::hyperbolic_geodesic(const ManifoldModel& model, double length) {
    if (model.kind() != ModelKind::HyperbolicSurface)
        throw ModelMismatch("geodesic segments need the hyperbolic model");
    if (length <= 0) throw Error("segment length must be positive");
    Submanifold h;
    h.model_ = model;
    h.kind_ = SubmanifoldKind::HyperbolicGeodesicSegment;
    h.codim_ = 1;
    h.closed_ = false;
    h.seg_length_ = length;
    h.length_ = length;
    return h;
}

Submanifold Submanifold::horocycle(const ManifoldModel& model, double length) {
    if (model.kind() != ModelKind::HyperbolicSurface)
        throw ModelMismatch("horocycle segments need the hyperbolic model");
    if (length <= 0) throw Error("segment length must be positive");
    Submanifold h;
    h.model_ = model;
    h.kind_ = SubmanifoldKind::HorocycleSegment;
    h.codim_ = 1;
    h.closed_ = false;
    h.seg_length_ = length;
    h.length_ = length;
    return h;
}

Submanifold Submanifold::geodesic_circle(const ManifoldModel& model, double radius) {
    if (model.kind() != ModelKind::HyperbolicSurface)
        throw ModelMismatch("geodesic circles need the hyperbolic model");
    if (radius < 1e-10) throw DegenerateImmersion("circle radius is zero");
    Submanifold h;
    h.model_ = model;
    h.kind_ = SubmanifoldKind::GeodesicCircle;
    h.codim_ = 1;
    h.closed_ = true;
    h.radius_ = radius;
    h.length_ = 2.0 * kPi * std::sinh(radius);
    return h;
}

Submanifold Submanifold::parametric_curve(const ManifoldModel& model,
                                          std::function<Vec(double)> gamma, bool closed) {
    Submanifold h;
    h.model_ = model;
    h.kind_ = SubmanifoldKind::ParametricCurve;
    h.codim_ = model.dim() - 1;
    h.closed_ = closed;
    h.curve_ = std::move(gamma);
    h.constant_speed_ = false;
    h.init_curve_geometry();
    return h;
}

void Submanifold::init_curve_geometry() {
    const int panels = 4096;
    cum_length_.assign(panels + 1, 0.0);
    double prev = velocity(0.0).norm();
    if (prev < 1e-10) throw DegenerateImmersion("curve speed vanishes at u = 0");
    for (int i = 1; i <= panels; ++i) {
        double u = double(i) / panels;
        double sp = velocity(u).norm();
        if (sp < 1e-10) throw DegenerateImmersion("curve speed vanishes at a quadrature node");
        cum_length_[i] = cum_length_[i - 1] + 0.5 * (prev + sp) / panels;
        prev = sp;
    }
    length_ = cum_length_.back();
}

// --- pointwise geometry ---

Vec Submanifold::at(double u) const {
    if (closed_) u = wrap01(u);
    switch (kind_) {
        case SubmanifoldKind::Point:
            return point_;
        case SubmanifoldKind::Equator:
            return Vec{std::cos(2 * kPi * u), std::sin(2 * kPi * u), 0.0};
        case SubmanifoldKind::LatitudeCircle: {
            double s = std::sin(psi0_), c = std::cos(psi0_);
            return Vec{s * std::cos(2 * kPi * u), s * std::sin(2 * kPi * u), c};
        }
        case SubmanifoldKind::TorusCircle:
            return wrap_torus(Vec{center_[0] + radius_ * std::cos(2 * kPi * u),
                                  center_[1] + radius_ * std::sin(2 * kPi * u)});
        case SubmanifoldKind::TorusGeodesic:
            return wrap_torus(Vec{center_[0] + u * dir_x_, center_[1] + u * dir_y_});
        case SubmanifoldKind::HyperbolicGeodesicSegment:
            return Vec{0.0, std::exp((u - 0.5) * seg_length_)};
        case SubmanifoldKind::HorocycleSegment:
            return Vec{(u - 0.5) * seg_length_, 1.0};
        case SubmanifoldKind::GeodesicCircle: {
            PhasePoint radial =
                hyperbolic_phase_point(model_, std::complex<double>(0.0, 1.0), 2 * kPi * u);
            return flow(model_, radial, radius_).x;
        }
        case SubmanifoldKind::ParametricCurve: {
            Vec x = curve_(u);
            if (model_.kind() == ModelKind::FlatTorus) x = wrap_torus(x);
            return x;
        }
    }
    return point_;
}

Vec Submanifold::velocity(double u) const {
    switch (kind_) {
        case SubmanifoldKind::Point:
            throw Error("a point has no parametric velocity");
        case SubmanifoldKind::Equator:
            return Vec{-2 * kPi * std::sin(2 * kPi * u), 2 * kPi * std::cos(2 * kPi * u), 0.0};
        case SubmanifoldKind::LatitudeCircle: {
            double s = std::sin(psi0_);
            return Vec{-2 * kPi * s * std::sin(2 * kPi * u), 2 * kPi * s * std::cos(2 * kPi * u),
                       0.0};
        }
        case SubmanifoldKind::TorusCircle:
            return Vec{-2 * kPi * radius_ * std::sin(2 * kPi * u),
                       2 * kPi * radius_ * std::cos(2 * kPi * u)};
        case SubmanifoldKind::TorusGeodesic:
            return Vec{double(dir_x_), double(dir_y_)};
        case SubmanifoldKind::HyperbolicGeodesicSegment:
            // |gamma'|_g = L at every u (vertical geodesic, arclength scaling).
            return Vec{0.0, seg_length_ * std::exp((u - 0.5) * seg_length_)};
        case SubmanifoldKind::HorocycleSegment:
            return Vec{seg_length_, 0.0};
        case SubmanifoldKind::GeodesicCircle: {
            PhasePoint radial =
                hyperbolic_phase_point(model_, std::complex<double>(0.0, 1.0), 2 * kPi * u);
            PhasePoint q = flow(model_, radial, radius_);
            double th = geometry::frame_angle(q.frame);
            std::complex<double> t_rad = std::polar(q.x[1], th);  // unit_g radial direction
            std::complex<double> vel =
                std::complex<double>(0.0, 1.0) * t_rad * (2 * kPi * std::sinh(radius_));
            return from_complex(vel);
        }
        case SubmanifoldKind::ParametricCurve: {
            Vec a = curve_(u + kFdStep), b = curve_(u - kFdStep);
            if (model_.kind() == ModelKind::FlatTorus) {
                Vec d(a.size());
                for (std::size_t i = 0; i < a.size(); ++i) {
                    double diff = a[i] - b[i];
                    diff -= std::round(diff);  // shortest representative across the wrap
                    d[i] = diff / (2 * kFdStep);
                }
                return d;
            }
            return (1.0 / (2 * kFdStep)) * (a - b);
        }
    }
    return Vec{};
}

Vec Submanifold::acceleration(double u) const {
    switch (kind_) {
        case SubmanifoldKind::ParametricCurve: {
            Vec a = curve_(u + kFdStep), m = curve_(u), b = curve_(u - kFdStep);
            Vec d(a.size());
            for (std::size_t i = 0; i < a.size(); ++i) {
                double da = a[i] - m[i], db = b[i] - m[i];
                if (model_.kind() == ModelKind::FlatTorus) {
                    da -= std::round(da);
                    db -= std::round(db);
                }
                d[i] = (da + db) / (kFdStep * kFdStep);
            }
            return d;
        }
        default: {
            // Analytic kinds: differentiate the analytic velocity.
            Vec a = velocity(u + kFdStep), b = velocity(u - kFdStep);
            return (1.0 / (2 * kFdStep)) * (a - b);
        }
    }
}

Vec Submanifold::unit_tangent(double u) const {
    Vec v = velocity(u);
    if (model_.kind() == ModelKind::HyperbolicSurface) {
        double y = at(u)[1];
        double n = v.norm() / y;  // hyperbolic norm
        return (1.0 / n) * v;     // Euclidean components of the unit_g tangent
    }
    return v.normalized();
}

Vec Submanifold::unit_normal(double u) const {
    if (codim_ != 1 || model_.dim() != 2)
        throw NotHypersurface("unit normals are defined for hypersurfaces in 2d models");
    Vec t = unit_tangent(u);
    if (model_.kind() == ModelKind::RoundSphere) {
        Vec x = at(u);
        // x cross t: the in-sphere rotation of the tangent by +90 degrees.
        return Vec{x[1] * t[2] - x[2] * t[1], x[2] * t[0] - x[0] * t[2],
                   x[0] * t[1] - x[1] * t[0]};
    }
    // Conformal models: multiply by i.
    return Vec{-t[1], t[0]};
}

double Submanifold::signed_curvature(double u) const {
    switch (kind_) {
        case SubmanifoldKind::Point:
            throw Error("curvature undefined for a point");
        case SubmanifoldKind::Equator:
        case SubmanifoldKind::TorusGeodesic:
        case SubmanifoldKind::HyperbolicGeodesicSegment:
            return 0.0;
        case SubmanifoldKind::LatitudeCircle:
            return 1.0 / std::tan(psi0_);
        case SubmanifoldKind::TorusCircle:
            return 1.0 / radius_;
        case SubmanifoldKind::HorocycleSegment:
            return 1.0;
        case SubmanifoldKind::GeodesicCircle:
            return 1.0 / std::tanh(radius_);
        case SubmanifoldKind::ParametricCurve: {
            // kappa = -<nabla_e nu, e>_g / |e|_g^2 with e the unit tangent.
            const double du = 1e-4;
            Vec e = unit_tangent(u);
            Vec nu_p = unit_normal(u + du), nu_m = unit_normal(u - du);
            double speed = velocity(u).norm();
            if (model_.kind() == ModelKind::HyperbolicSurface) speed /= at(u)[1];
            Vec dnu = (1.0 / (2 * du * speed)) * (nu_p - nu_m);  // d nu / ds, Euclidean
            switch (model_.kind()) {
                case ModelKind::FlatTorus:
                    return -dot(dnu, e);
                case ModelKind::RoundSphere: {
                    Vec x = at(u);
                    Vec cov = dnu - dot(dnu, x) * x;  // project out the ambient normal
                    return -dot(cov, e);
                }
                case ModelKind::HyperbolicSurface: {
                    double y = at(u)[1];
                    Vec nu = unit_normal(u);
                    // Christoffel terms of the half-plane metric.
                    Vec gamma{(-1.0 / y) * (e[0] * nu[1] + e[1] * nu[0]),
                              (1.0 / y) * (e[0] * nu[0] - e[1] * nu[1])};
                    Vec cov = dnu + gamma;
                    return -(cov[0] * e[0] + cov[1] * e[1]) / (y * y);
                }
            }
            return 0.0;
        }
    }
    return 0.0;
}

Vec Submanifold::conormal(double u, double fiber) const {
    if (kind_ == SubmanifoldKind::Point) {
        if (model_.kind() == ModelKind::RoundSphere) {
            const Vec& p = point_;
            int axis = 0;
            for (int i = 1; i < 3; ++i)
                if (std::abs(p[i]) < std::abs(p[axis])) axis = i;
            Vec a{0, 0, 0};
            a[axis] = 1.0;
            Vec e1 = (a - dot(a, p) * p).normalized();
            Vec e2{p[1] * e1[2] - p[2] * e1[1], p[2] * e1[0] - p[0] * e1[2],
                   p[0] * e1[1] - p[1] * e1[0]};
            return std::cos(fiber) * e1 + std::sin(fiber) * e2;
        }
        return Vec{std::cos(fiber), std::sin(fiber)};
    }
    Vec nu = unit_normal(u);
    if (model_.kind() == ModelKind::HyperbolicSurface) {
        double y = at(u)[1];
        return (fiber / (y * y)) * nu;  // covector components
    }
    return fiber * nu;
}

PhasePoint Submanifold::conormal_point(double u, double fiber) const {
    Vec x = (kind_ == SubmanifoldKind::Point) ? point_ : at(u);
    if (model_.kind() == ModelKind::HyperbolicSurface) {
        double angle;
        if (kind_ == SubmanifoldKind::Point) {
            angle = fiber;
        } else {
            Vec nu = unit_normal(u);
            angle = std::atan2(fiber * nu[1], fiber * nu[0]);
        }
        return hyperbolic_phase_point(model_, as_complex(x), angle);
    }
    return make_phase_point(model_, x, conormal(u, fiber));
}

double Submanifold::parameter_at_arclength(double s) const {
    if (kind_ == SubmanifoldKind::Point) return 0.0;
    if (constant_speed_ || cum_length_.empty()) return s / length_;
    // Invert the cumulative table.
    auto it = std::lower_bound(cum_length_.begin(), cum_length_.end(), s);
    if (it == cum_length_.begin()) return 0.0;
    if (it == cum_length_.end()) return 1.0;
    std::size_t i = static_cast<std::size_t>(it - cum_length_.begin());
    double s0 = cum_length_[i - 1], s1 = cum_length_[i];
    double frac = (s - s0) / std::max(s1 - s0, 1e-300);
    return (double(i - 1) + frac) / double(cum_length_.size() - 1);
}

double Submanifold::nearest_parameter(const Vec& x) const {
    if (kind_ == SubmanifoldKind::Point) return 0.0;
    switch (kind_) {
        case SubmanifoldKind::Equator:
        case SubmanifoldKind::LatitudeCircle:
            return wrap01(std::atan2(x[1], x[0]) / (2 * kPi));
        case SubmanifoldKind::TorusCircle: {
            double dx = x[0] - center_[0], dy = x[1] - center_[1];
            dx -= std::round(dx);
            dy -= std::round(dy);
            return wrap01(std::atan2(dy, dx) / (2 * kPi));
        }
        case SubmanifoldKind::GeodesicCircle: {
            std::complex<double> z = as_complex(x);
            const std::complex<double> i0(0.0, 1.0);
            if (std::abs(z - i0) < 1e-14) return 0.0;
            return wrap01(geometry::halfplane_direction(i0, z) / (2 * kPi));
        }
        default: break;
    }
    auto f = [&](double u) { return geometry::distance(model_, x, at(u)); };
    const int nscan = 256;
    double best_u = 0, best = f(0.0);
    for (int i = 1; i <= nscan; ++i) {
        double u = double(i) / nscan;
        double d = f(u);
        if (d < best) {
            best = d;
            best_u = u;
        }
    }
    double lo = best_u - 1.0 / nscan, hi = best_u + 1.0 / nscan;
    if (!closed_) {
        lo = std::max(lo, 0.0);
        hi = std::min(hi, 1.0);
    }
    double u = golden_min(f, lo, hi);
    return closed_ ? wrap01(u) : std::clamp(u, 0.0, 1.0);
}

// --- sampling ---

WeightedSampleSet sample_snh(const Submanifold& H, std::size_t N, std::uint64_t seed) {
    if (N < 1) throw Error("sample count must be at least 1");
    const int k = H.codim();
    const int n = H.model().dim();
    WeightedSampleSet out;
    out.tag = MeasureTag::SigmaSNH;
    out.total_mass = H.length() * sphere_volume(k - 1);
    const double w = out.total_mass / double(N);
    out.samples.reserve(N);
    for (std::size_t i = 0; i < N; ++i) {
        StreamRng rng(seed, i);
        double u = 0.0, fiber = 0.0;
        if (H.kind() == SubmanifoldKind::Point) {
            if (k == 2) {
                fiber = 2 * kPi * (double(i) + rng.uniform()) / double(N);
            } else {
                fiber = 0.0;  // high-codimension fibers sampled isotropically below
            }
        } else {
            double s = (double(i) + rng.uniform()) / double(N) * H.length();
            u = H.parameter_at_arclength(s);
            fiber = rng.coin() ? 1.0 : -1.0;
        }
        PhasePoint rho;
        if (H.kind() == SubmanifoldKind::Point && k > 2) {
            // Isotropic unit covector in the conormal sphere (torus points).
            if (H.model().kind() != ModelKind::FlatTorus)
                throw Error("high-codimension point fibers only implemented on tori");
            Vec xi(static_cast<std::size_t>(n));
            double norm2 = 0;
            do {
                norm2 = 0;
                for (int c = 0; c < n; ++c) {
                    double g = std::sqrt(-2.0 * std::log(1.0 - rng.uniform())) *
                               std::cos(2 * kPi * rng.uniform());
                    xi[c] = g;
                    norm2 += g * g;
                }
            } while (norm2 < 1e-12);
            xi *= 1.0 / std::sqrt(norm2);
            rho = make_phase_point(H.model(), H.base_point(), xi);
        } else {
            rho = H.conormal_point(u, fiber);
        }
        out.samples.push_back({rho, w, u, fiber});
    }
    return out;
}

WeightedSampleSet sample_snh_side(const Submanifold& H, std::size_t N, std::uint64_t seed,
                                  double fiber) {
    if (H.codim() != 1) throw NotHypersurface("one-sided sampling needs a hypersurface");
    if (N < 1) throw Error("sample count must be at least 1");
    WeightedSampleSet out;
    out.tag = MeasureTag::SigmaSNH;
    out.total_mass = H.length();
    const double w = out.total_mass / double(N);
    const double side = fiber >= 0 ? 1.0 : -1.0;
    for (std::size_t i = 0; i < N; ++i) {
        StreamRng rng(seed, i);
        double s = (double(i) + rng.uniform()) / double(N) * H.length();
        double u = H.parameter_at_arclength(s);
        out.samples.push_back({H.conormal_point(u, side), w, u, side});
    }
    return out;
}

WeightedSampleSet sample_liouville(const ManifoldModel& model, std::size_t N,
                                   std::uint64_t seed) {
    if (N < 1) throw Error("sample count must be at least 1");
    WeightedSampleSet out;
    out.tag = MeasureTag::Mu;
    out.total_mass = 1.0;
    const double w = 1.0 / double(N);
    // Angle-stratified with low-discrepancy base points: empirical tube
    // masses converge at quasi-Monte-Carlo rates.
    const double a1 = 0.7548776662466927, a2 = 0.5698402909980532;
    for (std::size_t i = 0; i < N; ++i) {
        StreamRng rng(seed, i);
        PhasePoint rho;
        switch (model.kind()) {
            case ModelKind::FlatTorus: {
                if (model.dim() != 2) throw Error("Liouville sampling implemented for n = 2");
                Vec x{wrap01(a1 * double(i) + rng.uniform() / double(N)),
                      wrap01(a2 * double(i) + rng.uniform() / double(N))};
                double th = 2 * kPi * (double(i) + rng.uniform()) / double(N);
                rho = make_phase_point(model, x, Vec{std::cos(th), std::sin(th)});
                break;
            }
            case ModelKind::RoundSphere: {
                double z = 2.0 * rng.uniform() - 1.0;
                double phi = 2 * kPi * rng.uniform();
                double r = std::sqrt(std::max(0.0, 1.0 - z * z));
                Vec x{r * std::cos(phi), r * std::sin(phi), z};
                int axis = std::abs(x[0]) < 0.9 ? 0 : 1;
                Vec a{0, 0, 0};
                a[axis] = 1.0;
                Vec e1 = (a - dot(a, x) * x).normalized();
                Vec e2{x[1] * e1[2] - x[2] * e1[1], x[2] * e1[0] - x[0] * e1[2],
                       x[0] * e1[1] - x[1] * e1[0]};
                double th = 2 * kPi * rng.uniform();
                rho = make_phase_point(model, x, std::cos(th) * e1 + std::sin(th) * e2);
                break;
            }
            case ModelKind::HyperbolicSurface:
                throw Error("Liouville sampling on the hyperbolic quotient is not provided");
        }
        out.samples.push_back({rho, w, 0.0, 0.0});
    }
    return out;
}

WeightedSampleSet plane_wave_measure(const ManifoldModel& model, const Vec& direction,
                                     std::size_t N, std::uint64_t seed) {
    if (model.kind() != ModelKind::FlatTorus) throw ModelMismatch("plane waves live on tori");
    WeightedSampleSet out;
    out.tag = MeasureTag::Mu;
    out.total_mass = 1.0;
    Vec xi = direction.normalized();
    const double w = 1.0 / double(N);
    for (std::size_t i = 0; i < N; ++i) {
        StreamRng rng(seed, i);
        Vec x(static_cast<std::size_t>(model.dim()));
        // x1 stratified at full sample granularity; the other coordinates
        // round-robin over 128 strata aligned with the default parameter
        // cells, so every cell sees the same x1 stratification.
        x[0] = (double(i) + rng.uniform()) / double(N);
        for (int c = 1; c < model.dim(); ++c)
            x[c] = (double(i % 128) + rng.uniform()) / 128.0;
        out.samples.push_back({make_phase_point(model, x, xi), w, 0.0, 0.0});
    }
    return out;
}

// --- distance to H ---

double r_H(const Submanifold& H, const Vec& x) {
    const ManifoldModel& model = H.model();
    switch (H.kind()) {
        case SubmanifoldKind::Point:
            return geometry::distance(model, x, H.base_point());
        case SubmanifoldKind::Equator:
            return std::abs(std::asin(std::clamp(x[2], -1.0, 1.0)));
        case SubmanifoldKind::LatitudeCircle:
            return std::abs(std::acos(std::clamp(x[2], -1.0, 1.0)) - H.polar_angle());
        case SubmanifoldKind::TorusGeodesic: {
            Vec v = H.velocity(0.0);
            double s = v.norm();
            double q = (-v[1] * (x[0]) + v[0] * (x[1])) / s;
            Vec p = H.at(0.0);
            double q0 = (-v[1] * p[0] + v[0] * p[1]) / s;
            return wrap_unit_dist((q - q0) * s) / s;
        }
        case SubmanifoldKind::TorusCircle: {
            const Vec& c = H.circle_center();
            double best = 1e300;
            for (int kx = -1; kx <= 1; ++kx)
                for (int ky = -1; ky <= 1; ++ky) {
                    double dd = std::hypot(x[0] + kx - c[0], x[1] + ky - c[1]);
                    best = std::min(best, std::abs(dd - H.radius()));
                }
            return best;
        }
        case SubmanifoldKind::GeodesicCircle: {
            // min over translates of |d(x, translate(i)) - r|
            const std::complex<double> i0(0.0, 1.0);
            std::complex<double> z = as_complex(x);
            double slack = geometry::halfplane_distance(z, i0);
            double best = std::abs(geometry::halfplane_distance(z, i0) - H.radius());
            const auto& ts = model.translates();
            const auto& disp = model.translate_displacements();
            for (std::size_t k = 1; k < ts.size(); ++k) {
                if (disp[k] - slack - H.radius() >= best) break;
                best = std::min(
                    best, std::abs(geometry::halfplane_distance(z, ts[k].moebius(i0)) -
                                   H.radius()));
            }
            return best;
        }
        default: {
            auto f = [&](double u) { return geometry::distance(model, x, H.at(u)); };
            const int nscan = 256;
            double best_u = 0.0, best = f(0.0);
            for (int i = 1; i <= nscan; ++i) {
                double u = double(i) / nscan;
                double d = f(u);
                if (d < best) {
                    best = d;
                    best_u = u;
                }
            }
            double lo = best_u - 1.0 / nscan, hi = best_u + 1.0 / nscan;
            if (!H.closed()) {
                lo = std::max(lo, 0.0);
                hi = std::min(hi, 1.0);
            }
            double u = golden_min(f, lo, hi);
            return f(H.closed() ? wrap01(u) : std::clamp(u, 0.0, 1.0));
        }
    }
}

// --- nearest conormal element ---

SnhNearest snh_nearest(const Submanifold& H, const PhasePoint& rho) {
    const ManifoldModel& model = H.model();
    SnhNearest best;
    if (H.kind() == SubmanifoldKind::Point) {
        best.u = 0.0;
        best.base_dist = geometry::distance(model, rho.x, H.base_point());
        best.dist = best.base_dist;  // every unit covector at the point is conormal
        best.fiber = 0.0;
        if (model.dim() == 2 && model.kind() != ModelKind::HyperbolicSurface &&
            best.base_dist < kPi - 1e-9) {
            Vec moved = geometry::parallel_transport(model, rho.x, H.base_point(), rho.xi);
            best.fiber = std::atan2(dot(moved, H.conormal(0.0, kPi / 2)),
                                    dot(moved, H.conormal(0.0, 0.0)));
        }
        return best;
    }

    auto eval = [&](double u, SnhNearest& out) {
        out.u = u;
        out.base_dist = geometry::distance(model, rho.x, H.at(u));
        double dp = sasaki_distance(model, rho, H.conormal_point(u, 1.0));
        double dm = sasaki_distance(model, rho, H.conormal_point(u, -1.0));
        if (dp <= dm) {
            out.dist = dp;
            out.fiber = 1.0;
        } else {
            out.dist = dm;
            out.fiber = -1.0;
        }
    };

    const int nscan = 128;
    best.dist = 1e300;
    for (int i = 0; i <= nscan; ++i) {
        double u = double(i) / nscan;
        if (H.closed() && i == nscan) break;
        double base = geometry::distance(model, rho.x, H.at(u));
        if (base >= best.dist) continue;       // sasaki >= base distance
        if (base >= kPi - 1e-8) continue;      // antipodal footpoints: transport ambiguous
        SnhNearest cand;
        eval(u, cand);
        if (cand.dist < best.dist) best = cand;
    }
    if (best.dist >= 1e300) {
        SnhNearest cand;
        eval(0.0, cand);  // everything antipodal; let CutLocus surface
        return cand;
    }
    double lo = best.u - 1.0 / nscan, hi = best.u + 1.0 / nscan;
    if (!H.closed()) {
        lo = std::max(lo, 0.0);
        hi = std::min(hi, 1.0);
    }
    auto fmin = [&](double u) {
        SnhNearest cand;
        eval(H.closed() ? wrap01(u) : u, cand);
        return cand.dist;
    };
    double u_star = golden_min(fmin, lo, hi, 1e-11);
    SnhNearest refined;
    eval(H.closed() ? wrap01(u_star) : std::clamp(u_star, 0.0, 1.0), refined);
    return refined.dist < best.dist ? refined : best;
}

namespace {

double angle_to_line(const Vec& xi, const Vec& nu) {
    // Angle from xi to the closer of +-nu, both unit; the atan2 form keeps
    // full precision near 0.
    double d = std::abs(dot(xi, nu));
    double cross;
    if (xi.size() == 2) {
        cross = std::abs(xi[0] * nu[1] - xi[1] * nu[0]);
    } else {
        Vec c{xi[1] * nu[2] - xi[2] * nu[1], xi[2] * nu[0] - xi[0] * nu[2],
              xi[0] * nu[1] - xi[1] * nu[0]};
        cross = c.norm();
    }
    return std::atan2(cross, d);
}

// Upper bound on the Sasaki distance to SN*H from the perpendicular-foot
// candidate: the geodesic from x to its nearest footpoint is normal to H, so
// the conormal direction parallel-transports onto the radial direction at x.
// Exact for straight torus geodesics; for the circle kinds it is the exact
// distance to the radial conormal element and converges to the true distance
// as rho approaches SN*H.
double snh_distance_fast(const Submanifold& H, const PhasePoint& rho) {
    const ManifoldModel& model = H.model();
    switch (H.kind()) {
        case SubmanifoldKind::Point:
            return geometry::distance(model, rho.x, H.base_point());
        case SubmanifoldKind::TorusGeodesic: {
            Vec v = H.velocity(0.0);
            Vec nu{-v[1] / v.norm(), v[0] / v.norm()};
            return std::hypot(r_H(H, rho.x), angle_to_line(rho.xi, nu));
        }
        case SubmanifoldKind::TorusCircle: {
            const Vec& c = H.circle_center();
            double best = 1e300;
            for (int kx = -1; kx <= 1; ++kx)
                for (int ky = -1; ky <= 1; ++ky) {
                    Vec d{rho.x[0] + kx - c[0], rho.x[1] + ky - c[1]};
                    double dn = d.norm();
                    if (dn < 1e-12) continue;  // at the center: every direction radial
                    double cand = std::hypot(std::abs(dn - H.radius()),
                                             angle_to_line(rho.xi, d.normalized()));
                    best = std::min(best, cand);
                }
            return best;
        }
        case SubmanifoldKind::Equator:
        case SubmanifoldKind::LatitudeCircle: {
            Vec pole_dir{-rho.x[2] * rho.x[0], -rho.x[2] * rho.x[1],
                         1.0 - rho.x[2] * rho.x[2]};
            double n = pole_dir.norm();
            if (n < 1e-12) return std::hypot(r_H(H, rho.x), 0.0);  // at a pole
            return std::hypot(r_H(H, rho.x), angle_to_line(rho.xi, (1.0 / n) * pole_dir));
        }
        case SubmanifoldKind::GeodesicCircle: {
            const std::complex<double> i0(0.0, 1.0);
            std::complex<double> z(rho.x[0], rho.x[1]);
            double th = std::atan2(rho.xi[1], rho.xi[0]);
            double slack = geometry::halfplane_distance(z, i0) + H.radius();
            const auto& ts = model.translates();
            const auto& disp = model.translate_displacements();
            double best = 1e300;
            for (std::size_t k = 0; k < ts.size(); ++k) {
                if (disp[k] - slack >= best) break;
                std::complex<double> ck = ts[k].moebius(i0);
                double d = geometry::halfplane_distance(z, ck);
                if (d < 1e-12) continue;
                double radial = geometry::halfplane_direction(z, ck);
                double dth = std::abs(std::remainder(th - radial, kPi));
                best = std::min(best, std::hypot(std::abs(d - H.radius()), dth));
            }
            return best;
        }
        default:
            return snh_nearest(H, rho).dist;
    }
}

}  // namespace

double snh_distance(const Submanifold& H, const PhasePoint& rho) {
    return snh_nearest(H, rho).dist;
}

// --- |H_p r_H| ---

double hp_r(const Submanifold& H, const PhasePoint& rho) {
    if (snh_distance(H, rho) > 1e-6)
        throw NotConormal("phase point is not within 1e-6 of SN*H");
    // r_H along the Hamiltonian orbit of p = |xi|^2 - 1; Hamiltonian time t
    // corresponds to arclength 2t.
    auto g = [&](double t) { return r_H(H, flow(H.model(), rho, 2.0 * t).x); };
    auto deriv = [&](double t) {
        double delta = std::abs(t) / 2.0;
        return std::abs(g(t + delta) - g(t - delta)) / (2.0 * delta);
    };
    const double t1 = 1e-3, t2 = 5e-4;
    double plus = 2.0 * deriv(t2) - deriv(t1);
    double minus = 2.0 * deriv(-t2) - deriv(-t1);
    return 0.5 * (plus + minus);
}

// --- tubes ---

void scan_snh_approaches(const Submanifold& H, const PhasePoint& rho, double t_lo,
                         double t_hi, double step, double eps,
                         const std::function<bool(double, double)>& on_event) {
    const ManifoldModel& model = H.model();
    PhasePoint cur = flow(model, rho, t_lo);
    const double filter = 1.25 * eps;
    bool window_open = r_H(H, cur.x) < filter;
    double window_start = t_lo;
    auto flush = [&](double a, double b) -> bool {
        auto f = [&](double t) { return snh_distance_fast(H, flow(model, rho, t)); };
        double t_star = golden_min(f, a, b, 1e-10);
        double d = f(t_star);
        if (d < eps) return on_event(t_star, d);
        return true;
    };
    double t = t_lo;
    double prev_step = step;
    while (t < t_hi - 1e-15) {
        // Outside the filter window the base distance is 1-Lipschitz along
        // the orbit, so the walk can advance by half the remaining gap
        // without skipping an approach.
        double r_cur = r_H(H, cur.x);
        double advance = window_open ? step : std::max(step, 0.5 * (r_cur - filter));
        double t_next = std::min(t + advance, t_hi);
        cur = flow(model, cur, t_next - t);
        double r = r_H(H, cur.x);
        if (r < filter && !window_open) {
            window_open = true;
            window_start = t;
        } else if (r >= filter && window_open) {
            if (!flush(window_start - prev_step, t_next)) return;
            window_open = false;
        }
        prev_step = t_next - t;
        t = t_next;
    }
    if (window_open) flush(window_start - prev_step, t_hi);
}

bool in_tube(const Submanifold& H, const PhasePoint& rho, double T, double eps) {
    if (T < 0 || eps <= 0) throw Error("tube parameters need T >= 0 and eps > 0");
    if (snh_distance_fast(H, rho) < eps) return true;  // t = 0
    bool hit = false;
    scan_snh_approaches(H, rho, -T, T, eps / 4.0, eps, [&](double, double) {
        hit = true;
        return false;
    });
    return hit;
}

// --- cell partitions and flowout ---

CellPartition CellPartition::default_for(const Submanifold& H) {
    CellPartition p;
    p.param_bins = (H.dim() == 0) ? 1 : 64;
    if (H.codim() == 1) {
        p.fiber_bins = 2;
    } else if (H.codim() == 2) {
        p.fiber_bins = 16;
    } else {
        throw Error("cell partitions are provided for codimension 1 and 2");
    }
    return p;
}

int CellPartition::cell_of(const Submanifold& H, double u, double fiber) const {
    int pu = std::min(param_bins - 1, std::max(0, int(u * param_bins)));
    int pf;
    if (H.codim() == 1) {
        pf = fiber > 0 ? 0 : 1;
        pf = std::min(pf, fiber_bins - 1);
    } else {
        pf = std::min(fiber_bins - 1,
                      std::max(0, int(wrap01(fiber / (2 * kPi)) * fiber_bins)));
    }
    return pu * fiber_bins + pf;
}

void CellPartition::cell_center(const Submanifold& H, int cell, double& u,
                                double& fiber) const {
    int pu = cell / fiber_bins;
    int pf = cell % fiber_bins;
    u = (pu + 0.5) / param_bins;
    if (H.codim() == 1) {
        fiber = pf == 0 ? 1.0 : -1.0;
    } else {
        fiber = 2 * kPi * (pf + 0.5) / fiber_bins;
    }
}

double CellPartition::sigma_mass(const Submanifold& H, int cell) const {
    (void)cell;
    double base = H.length() / param_bins;
    double fiber = sphere_volume(H.codim() - 1) / fiber_bins;
    return base * fiber;
}

std::vector<double> flowout_cell_masses(const WeightedSampleSet& mu, const Submanifold& H,
                                        double t0, const CellPartition& cells, double eps) {
    if (cells.cell_count() <= 0) throw EmptyPartition("cell partition has no cells");
    if (t0 <= 0) throw Error("flowout needs t0 > 0");
    std::vector<double> masses(cells.cell_count(), 0.0);
    const double reach = 2.0 * t0;  // Hamiltonian window |t| <= t0 at speed 2
    std::vector<int> hits;
    for (const auto& s : mu.samples) {
        hits.clear();
        scan_snh_approaches(H, s.point, -reach, reach, eps / 4.0, eps,
                            [&](double t_star, double) {
                                auto near = snh_nearest(H, flow(H.model(), s.point, t_star));
                                int c = cells.cell_of(H, near.u, near.fiber);
                                if (std::find(hits.begin(), hits.end(), c) == hits.end())
                                    hits.push_back(c);
                                return true;
                            });
        for (int c : hits) masses[c] += s.weight;
    }
    for (double& m : masses) m /= 2.0 * t0;
    return masses;
}

WeightedSampleSet flowout_measure(const WeightedSampleSet& mu, const Submanifold& H,
                                  double t0, const CellPartition& cells, double eps) {
    std::vector<double> masses = flowout_cell_masses(mu, H, t0, cells, eps);
    WeightedSampleSet out;
    out.tag = MeasureTag::MuH;
    for (int c = 0; c < cells.cell_count(); ++c) {
        if (masses[c] <= 0.0) continue;
        double u, fiber;
        cells.cell_center(H, c, u, fiber);
        out.samples.push_back({H.conormal_point(u, fiber), masses[c], u, fiber});
        out.total_mass += masses[c];
    }
    return out;
}

}  // namespace clab::conormal
