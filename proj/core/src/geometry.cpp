#include "conormal_lab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_set>

namespace clab::geometry {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

double clamp_unit(double x) { return std::min(1.0, std::max(-1.0, x)); }

// Angle between unit vectors via chord lengths; acos(dot) loses half the
// digits near 0 and pi.
double unit_angle(const Vec& a, const Vec& b) {
    if (dot(a, b) >= 0.0) {
        double chord = (a - b).norm();
        return 2.0 * std::asin(std::min(1.0, 0.5 * chord));
    }
    double anti = (a + b).norm();
    return 3.141592653589793238462643383279502884 - 2.0 * std::asin(std::min(1.0, 0.5 * anti));
}

double wrap_angle_pi(double a) {
    a = std::fmod(a, 2 * kPi);
    if (a > kPi) a -= 2 * kPi;
    if (a < -kPi) a += 2 * kPi;
    return a;
}

double wrap01(double x) {
    double r = x - std::floor(x);
    if (r >= 1.0) r = 0.0;  // guards against floor(x) = x - 1 rounding
    return r;
}

// Sign-canonical rounded key; g and -g act identically on the half-plane.
std::string matrix_key(const Mat2& m) {
    double s = 1.0;
    const double entries[4] = {m.a, m.b, m.c, m.d};
    for (double e : entries) {
        if (std::abs(e) > 1e-9) {
            s = e > 0 ? 1.0 : -1.0;
            break;
        }
    }
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%.6f,%.6f,%.6f,%.6f", s * m.a, s * m.b, s * m.c, s * m.d);
    return buf;
}

}  // namespace

ManifoldModel ManifoldModel::torus(int dim) {
    if (dim < 2) throw Error("torus dimension must be >= 2");
    ManifoldModel m;
    m.kind_ = ModelKind::FlatTorus;
    m.dim_ = dim;
    return m;
}

ManifoldModel ManifoldModel::sphere(int dim) {
    if (dim < 2) throw Error("sphere dimension must be >= 2");
    ManifoldModel m;
    m.kind_ = ModelKind::RoundSphere;
    m.dim_ = dim;
    return m;
}

ManifoldModel ManifoldModel::hyperbolic(const std::vector<Mat2>& generators) {
    if (generators.empty()) throw Error("hyperbolic surface needs at least one generator");
    ManifoldModel m;
    m.kind_ = ModelKind::HyperbolicSurface;
    m.dim_ = 2;
    for (const Mat2& g : generators) {
        if (std::abs(g.det() - 1.0) >= 1e-12)
            throw Error("hyperbolic generator determinant must be 1 within 1e-12");
        m.generators_.push_back(g);
    }
    // Close under inversion.
    std::unordered_set<std::string> seen;
    for (const Mat2& g : m.generators_) seen.insert(matrix_key(g));
    std::vector<Mat2> inverses;
    for (const Mat2& g : m.generators_) {
        Mat2 gi = g.inverse();
        if (seen.insert(matrix_key(gi)).second) inverses.push_back(gi);
    }
    m.generators_.insert(m.generators_.end(), inverses.begin(), inverses.end());
    m.build_translate_table();
    return m;
}

ManifoldModel ManifoldModel::bolza() {
    // Side pairings of the regular hyperbolic octagon centered at i: the
    // translation of length 2*arccosh(1+sqrt(2)) along the axis through i at
    // angle k*pi/4, k = 0..3 (inverses are added automatically).
    const double alpha = 1.0 + std::sqrt(2.0);
    const double beta = std::sqrt(2.0 + 2.0 * std::sqrt(2.0));
    std::vector<Mat2> gens;
    for (int k = 0; k < 4; ++k) {
        double th = k * kPi / 4.0;
        gens.push_back({alpha + beta * std::cos(th), -beta * std::sin(th),
                        -beta * std::sin(th), alpha - beta * std::cos(th)});
    }
    return hyperbolic(gens);
}

void ManifoldModel::build_translate_table() {
    const std::complex<double> i0(0.0, 1.0);
    double max_gen_disp = 0.0;
    for (const Mat2& g : generators_)
        max_gen_disp = std::max(max_gen_disp, halfplane_distance(g.moebius(i0), i0));
    const double cutoff = 2.1 * max_gen_disp + 0.5;

    struct Entry {
        Mat2 m;
        double disp;
    };
    std::vector<Entry> table{{Mat2{}, 0.0}};
    std::unordered_set<std::string> seen{matrix_key(Mat2{})};
    std::vector<Mat2> frontier{Mat2{}};
    for (int depth = 0; depth < 5 && !frontier.empty(); ++depth) {
        std::vector<Mat2> next;
        for (const Mat2& w : frontier) {
            for (const Mat2& g : generators_) {
                Mat2 p = g * w;
                if (!seen.insert(matrix_key(p)).second) continue;
                double disp = halfplane_distance(p.moebius(i0), i0);
                // Long words are still worth expanding once; their products
                // can fold back near the identity.
                if (disp <= cutoff + max_gen_disp) next.push_back(p);
                if (disp <= cutoff) table.push_back({p, disp});
            }
        }
        frontier = std::move(next);
    }
    std::sort(table.begin(), table.end(),
              [](const Entry& a, const Entry& b) { return a.disp < b.disp; });
    translates_.clear();
    displacements_.clear();
    for (const Entry& e : table) {
        translates_.push_back(e.m);
        displacements_.push_back(e.disp);
    }
}

double ManifoldModel::curvature() const {
    switch (kind_) {
        case ModelKind::FlatTorus: return 0.0;
        case ModelKind::RoundSphere: return 1.0;
        case ModelKind::HyperbolicSurface: return -1.0;
    }
    return 0.0;
}

// --- half-plane helpers ---

double halfplane_distance(std::complex<double> z, std::complex<double> w) {
    // sinh^2(d/2) = |z - w|^2 / (4 Im z Im w); the asinh form keeps full
    // relative precision for nearby points.
    double q = std::abs(z - w) / (2.0 * std::sqrt(z.imag() * w.imag()));
    return 2.0 * std::asinh(q);
}

double halfplane_direction(std::complex<double> z, std::complex<double> w) {
    std::complex<double> d = (w - z) / (w - std::conj(z));
    return kPi / 2.0 + std::arg(d);
}

std::complex<double> frame_position(const Mat2& g) {
    double den = g.c * g.c + g.d * g.d;
    return {(g.a * g.c + g.b * g.d) / den, 1.0 / den};
}

double frame_angle(const Mat2& g) {
    // Euclidean direction of the pushed-forward vertical at g.i.
    return std::atan2(g.d * g.d - g.c * g.c, 2.0 * g.c * g.d);
}

Mat2 reduce_to_fundamental_domain(const ManifoldModel& model, Mat2 g) {
    const std::complex<double> i0(0.0, 1.0);
    std::complex<double> z = frame_position(g);
    double dist = halfplane_distance(z, i0);
    for (int step = 0; step < 10000; ++step) {
        bool improved = false;
        for (const Mat2& gen : model.generators()) {
            std::complex<double> zg = gen.moebius(z);
            double dg = halfplane_distance(zg, i0);
            if (dg < dist - 1e-13) {
                g = gen * g;
                z = zg;
                dist = dg;
                improved = true;
                break;
            }
        }
        if (!improved) return g;
    }
    throw GroupReductionFailed("fundamental-domain reduction did not terminate in 10000 steps");
}

double hyperbolic_quotient_distance(const ManifoldModel& model,
                                    std::complex<double> z, std::complex<double> w) {
    const std::complex<double> i0(0.0, 1.0);
    double slack = halfplane_distance(z, i0) + halfplane_distance(w, i0);
    double best = halfplane_distance(z, w);
    const auto& ts = model.translates();
    const auto& disp = model.translate_displacements();
    for (std::size_t k = 1; k < ts.size(); ++k) {
        if (disp[k] - slack >= best) break;  // sorted by displacement
        best = std::min(best, halfplane_distance(z, ts[k].moebius(w)));
    }
    return best;
}

// --- phase points ---

PhasePoint make_phase_point(const ManifoldModel& model, const Vec& x, const Vec& xi) {
    PhasePoint rho;
    if (model.kind() == ModelKind::HyperbolicSurface) {
        if (x.size() != 2 || xi.size() != 2)
            throw InvalidPhasePoint("hyperbolic phase point needs 2 coordinates");
        std::complex<double> z(x[0], x[1]);
        // xi holds unit covector components; the tangent direction is parallel.
        double angle = std::atan2(xi[1], xi[0]);
        return hyperbolic_phase_point(model, z, angle);
    }
    rho.x = x;
    rho.xi = xi;
    if (model.kind() == ModelKind::FlatTorus) rho.x = wrap_torus(rho.x);
    validate(model, rho);
    return rho;
}

PhasePoint hyperbolic_phase_point(const ManifoldModel& model, const Mat2& frame) {
    if (std::abs(frame.det() - 1.0) > 1e-8)
        throw InvalidPhasePoint("frame determinant must be 1");
    PhasePoint rho;
    rho.frame = reduce_to_fundamental_domain(model, frame);
    rho.has_frame = true;
    std::complex<double> z = frame_position(rho.frame);
    double th = frame_angle(rho.frame);
    rho.x = Vec{z.real(), z.imag()};
    // Unit covector: tangent angle th, Euclidean covector length 1/y.
    rho.xi = Vec{std::cos(th) / z.imag(), std::sin(th) / z.imag()};
    return rho;
}

PhasePoint hyperbolic_phase_point(const ManifoldModel& model, std::complex<double> z, double angle) {
    if (!(z.imag() > 0)) throw InvalidPhasePoint("half-plane point needs positive imaginary part");
    double sy = std::sqrt(z.imag());
    Mat2 translate{sy, z.real() / sy, 0.0, 1.0 / sy};
    double phi = angle - kPi / 2.0;  // frame identity points straight up
    Mat2 rotate{std::cos(phi / 2), std::sin(phi / 2), -std::sin(phi / 2), std::cos(phi / 2)};
    return hyperbolic_phase_point(model, translate * rotate);
}

void validate(const ManifoldModel& model, const PhasePoint& rho) {
    switch (model.kind()) {
        case ModelKind::FlatTorus: {
            if (static_cast<int>(rho.x.size()) != model.dim() ||
                static_cast<int>(rho.xi.size()) != model.dim())
                throw InvalidPhasePoint("torus phase point has wrong dimension");
            for (std::size_t i = 0; i < rho.x.size(); ++i)
                if (rho.x[i] < 0.0 || rho.x[i] >= 1.0)
                    throw InvalidPhasePoint("torus coordinates must lie in [0,1)");
            if (std::abs(rho.xi.norm() - 1.0) > 1e-10)
                throw InvalidPhasePoint("covector is not unit");
            break;
        }
        case ModelKind::RoundSphere: {
            if (static_cast<int>(rho.x.size()) != model.dim() + 1 ||
                static_cast<int>(rho.xi.size()) != model.dim() + 1)
                throw InvalidPhasePoint("sphere phase point has wrong dimension");
            if (std::abs(rho.x.squared_norm() - 1.0) > 1e-12 * 2 + 1e-12)
                throw InvalidPhasePoint("base point is not on the unit sphere");
            if (std::abs(rho.xi.norm() - 1.0) > 1e-10)
                throw InvalidPhasePoint("covector is not unit");
            if (std::abs(dot(rho.x, rho.xi)) > 1e-10)
                throw InvalidPhasePoint("covector is not tangent to the sphere");
            break;
        }
        case ModelKind::HyperbolicSurface: {
            if (!rho.has_frame) throw InvalidPhasePoint("hyperbolic phase point needs a frame");
            if (std::abs(rho.frame.det() - 1.0) > 1e-8)
                throw InvalidPhasePoint("frame determinant drifted from 1");
            break;
        }
    }
}

Vec wrap_torus(Vec x) {
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = wrap01(x[i]);
    return x;
}

// --- flow ---

PhasePoint flow(const ManifoldModel& model, const PhasePoint& rho, double t) {
    validate(model, rho);
    PhasePoint out = rho;
    switch (model.kind()) {
        case ModelKind::FlatTorus: {
            out.x = wrap_torus(rho.x + t * rho.xi);
            break;
        }
        case ModelKind::RoundSphere: {
            double c = std::cos(t), s = std::sin(t);
            out.x = c * rho.x + s * rho.xi;
            out.xi = -s * rho.x + c * rho.xi;
            break;
        }
        case ModelKind::HyperbolicSurface: {
            // Advance in bounded chunks, reducing between them: unreduced
            // frame entries grow like e^{t/2} and long flows would otherwise
            // lose the determinant to cancellation.
            Mat2 g = rho.frame;
            double remaining = t;
            const double chunk = 3.0;
            while (std::abs(remaining) > chunk) {
                double dt = remaining > 0 ? chunk : -chunk;
                double e = std::exp(dt / 2.0);
                g = reduce_to_fundamental_domain(model, g * Mat2{e, 0.0, 0.0, 1.0 / e});
                remaining -= dt;
            }
            double e = std::exp(remaining / 2.0);
            return hyperbolic_phase_point(model, g * Mat2{e, 0.0, 0.0, 1.0 / e});
        }
    }
    return out;
}

TangentPerturbation dflow(const ManifoldModel& model, const PhasePoint& rho,
                          const TangentPerturbation& v, double t) {
    validate(model, rho);
    const std::size_t m = static_cast<std::size_t>(model.dim()) - 1;
    if (v.horizontal.size() != m || v.vertical.size() != m)
        throw InvalidPhasePoint("Jacobi data must have n-1 components");
    TangentPerturbation out;
    switch (model.kind()) {
        case ModelKind::FlatTorus:
            out.horizontal = v.horizontal + t * v.vertical;
            out.vertical = v.vertical;
            break;
        case ModelKind::RoundSphere: {
            double c = std::cos(t), s = std::sin(t);
            out.horizontal = c * v.horizontal + s * v.vertical;
            out.vertical = -s * v.horizontal + c * v.vertical;
            break;
        }
        case ModelKind::HyperbolicSurface: {
            double ch = std::cosh(t), sh = std::sinh(t);
            out.horizontal = ch * v.horizontal + sh * v.vertical;
            out.vertical = sh * v.horizontal + ch * v.vertical;
            break;
        }
    }
    return out;
}

// --- distances and transport ---

double distance(const ManifoldModel& model, const Vec& x, const Vec& y) {
    switch (model.kind()) {
        case ModelKind::FlatTorus: {
            double s = 0;
            for (std::size_t i = 0; i < x.size(); ++i) {
                double d = std::abs(x[i] - y[i]);
                d = std::min(d, 1.0 - d);
                s += d * d;
            }
            return std::sqrt(s);
        }
        case ModelKind::RoundSphere:
            return unit_angle(x, y);
        case ModelKind::HyperbolicSurface:
            return hyperbolic_quotient_distance(model, {x[0], x[1]}, {y[0], y[1]});
    }
    return 0.0;
}

Vec parallel_transport(const ManifoldModel& model, const Vec& from, const Vec& to, const Vec& v) {
    switch (model.kind()) {
        case ModelKind::FlatTorus:
            return v;
        case ModelKind::RoundSphere: {
            double ct = clamp_unit(dot(from, to));
            double theta = std::acos(ct);
            double st = std::sin(theta);
            if (theta < 1e-12) return v;
            if (st < 1e-8) throw CutLocus("parallel transport between antipodal points is ambiguous");
            Vec u = (1.0 / st) * (to - ct * from);    // at `from`, toward `to`
            Vec w = (1.0 / st) * (from - ct * to);    // at `to`, toward `from`
            double a = dot(v, u);
            // In-plane part u maps to -w; off-plane part is unchanged.
            return v - a * u + a * (-1.0 * w);
        }
        case ModelKind::HyperbolicSurface: {
            std::complex<double> z(from[0], from[1]), w(to[0], to[1]);
            std::complex<double> tv(v[0], v[1]);
            if (std::abs(z - w) < 1e-14) return v;
            double th_out = halfplane_direction(z, w);
            double th_in = halfplane_direction(w, z) + kPi;  // arrival direction
            double angle = std::arg(tv) - th_out + th_in;
            double len = std::abs(tv) / from[1] * to[1];  // preserve hyperbolic norm
            return Vec{len * std::cos(angle), len * std::sin(angle)};
        }
    }
    return v;
}

double sasaki_distance(const ManifoldModel& model, const PhasePoint& rho1, const PhasePoint& rho2) {
    switch (model.kind()) {
        case ModelKind::FlatTorus: {
            double base = distance(model, rho1.x, rho2.x);
            double fiber = unit_angle(rho1.xi, rho2.xi);
            return std::hypot(base, fiber);
        }
        case ModelKind::RoundSphere: {
            double base = distance(model, rho1.x, rho2.x);
            Vec moved = parallel_transport(model, rho2.x, rho1.x, rho2.xi);
            double fiber = unit_angle(rho1.xi, moved.normalized());
            return std::hypot(base, fiber);
        }
        case ModelKind::HyperbolicSurface: {
            const std::complex<double> i0(0.0, 1.0);
            std::complex<double> z1(rho1.x[0], rho1.x[1]);
            std::complex<double> z2(rho2.x[0], rho2.x[1]);
            double th1 = frame_angle(rho1.frame);
            double th2 = frame_angle(rho2.frame);
            // Minimize the base distance over translates of z2, tracking the
            // rotation the winning translate applies to the direction.
            double slack = halfplane_distance(z1, i0) + halfplane_distance(z2, i0);
            double best = halfplane_distance(z1, z2);
            std::complex<double> bz = z2;
            double bth = th2;
            const auto& ts = model.translates();
            const auto& disp = model.translate_displacements();
            for (std::size_t k = 1; k < ts.size(); ++k) {
                if (disp[k] - slack >= best) break;
                std::complex<double> zk = ts[k].moebius(z2);
                double dk = halfplane_distance(z1, zk);
                if (dk < best) {
                    best = dk;
                    bz = zk;
                    std::complex<double> tv(std::cos(th2), std::sin(th2));
                    bth = std::arg(ts[k].push_tangent(z2, tv));
                }
            }
            double fiber;
            if (best < 1e-12) {
                fiber = std::abs(wrap_angle_pi(th1 - bth));
            } else {
                double th_out = halfplane_direction(bz, z1);
                double th_in = halfplane_direction(z1, bz) + kPi;
                fiber = std::abs(wrap_angle_pi((th1 - th_in) - (bth - th_out)));
            }
            return std::hypot(best, fiber);
        }
    }
    return 0.0;
}

}  // namespace clab::geometry
