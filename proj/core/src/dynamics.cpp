#include "conormal_lab/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace clab::dynamics {

using conormal::sample_snh;
using conormal::scan_snh_approaches;
using conormal::snh_distance;
using conormal::SubmanifoldKind;
using geometry::flow;
using geometry::Mat2;
using geometry::ModelKind;
using geometry::sasaki_distance;

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

PhasePoint reverse_direction(const ManifoldModel& model, const PhasePoint& rho) {
    if (model.kind() == ModelKind::HyperbolicSurface) {
        // Rotate the frame direction by pi.
        const Mat2 r_pi{0.0, 1.0, -1.0, 0.0};
        return geometry::hyperbolic_phase_point(model, rho.frame * r_pi);
    }
    PhasePoint out = rho;
    out.xi = -1.0 * rho.xi;
    return out;
}

std::optional<ReturnEvent> first_return_core(const Submanifold& H, const PhasePoint& rho,
                                             double T_max, double eps, bool backward) {
    const ManifoldModel& model = H.model();
    PhasePoint start = backward ? reverse_direction(model, rho) : rho;
    std::optional<ReturnEvent> found;
    scan_snh_approaches(H, start, 0.0, T_max, eps / 4.0, eps, [&](double t, double d) {
        if (t <= eps) return true;  // the departure window around t = 0
        ReturnEvent ev;
        ev.t = t;
        PhasePoint out = flow(model, start, t);
        ev.rho_out = backward ? reverse_direction(model, out) : out;
        ev.miss_distance = d;
        found = ev;
        return false;
    });
    return found;
}

double angle_between_lines(double v0, double v1, double w0, double w1) {
    double cross = std::abs(v0 * w1 - v1 * w0);
    double nv = std::hypot(v0, v1), nw = std::hypot(w0, w1);
    double s = std::min(1.0, cross / (nv * nw));
    return std::asin(s);
}

// sqrt(det) of the Gram matrix of the horizontal parts of a propagated frame.
double horizontal_gram_sqrt(const std::vector<geometry::TangentPerturbation>& frame) {
    const std::size_t m = frame.size();
    if (m == 0) return 1.0;
    if (m == 1) return frame[0].horizontal.norm();
    std::vector<double> g(m * m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j)
            g[i * m + j] = dot(frame[i].horizontal, frame[j].horizontal);
    // Gaussian elimination determinant.
    double det = 1.0;
    for (std::size_t col = 0; col < m; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < m; ++r)
            if (std::abs(g[r * m + col]) > std::abs(g[piv * m + col])) piv = r;
        if (std::abs(g[piv * m + col]) < 1e-300) return 0.0;
        if (piv != col) {
            for (std::size_t c = 0; c < m; ++c) std::swap(g[piv * m + c], g[col * m + c]);
            det = -det;
        }
        det *= g[col * m + col];
        for (std::size_t r = col + 1; r < m; ++r) {
            double f = g[r * m + col] / g[col * m + col];
            for (std::size_t c = col; c < m; ++c) g[r * m + c] -= f * g[col * m + c];
        }
    }
    return std::sqrt(std::max(0.0, det));
}

// Conormal-frame Jacobi data of T(SN*H) at a sample, normalized against the
// Fermi product measure: the curve direction carries unit horizontal part,
// fiber directions are unit verticals.
std::vector<geometry::TangentPerturbation> snh_frame(const Submanifold& H, double u,
                                                     double fiber) {
    const int n = H.model().dim();
    const std::size_t m = static_cast<std::size_t>(n) - 1;
    std::vector<geometry::TangentPerturbation> frame;
    if (H.dim() == 1) {
        geometry::TangentPerturbation curve_dir;
        curve_dir.horizontal = Vec(m);
        curve_dir.vertical = Vec(m);
        curve_dir.horizontal[0] = 1.0;
        curve_dir.vertical[0] = -fiber * H.signed_curvature(u);
        frame.push_back(curve_dir);
        // Curves of codimension 1 in a surface carry no extra fiber frame.
        for (std::size_t j = 1; j < m; ++j) {
            geometry::TangentPerturbation fiber_dir;
            fiber_dir.horizontal = Vec(m);
            fiber_dir.vertical = Vec(m);
            fiber_dir.vertical[j] = 1.0;
            frame.push_back(fiber_dir);
        }
    } else {
        // A point: the fiber sphere's tangent directions are pure verticals.
        for (std::size_t j = 0; j < m; ++j) {
            geometry::TangentPerturbation fiber_dir;
            fiber_dir.horizontal = Vec(m);
            fiber_dir.vertical = Vec(m);
            fiber_dir.vertical[j] = 1.0;
            frame.push_back(fiber_dir);
        }
    }
    return frame;
}

struct TailFit {
    double slope = 0.0;
    double end_level = 0.0;  // mean integrand near the far end
};

TailFit fit_log_tail(const std::vector<double>& t, const std::vector<double>& v) {
    TailFit out;
    if (t.size() < 4) return out;
    double vmax = 0.0;
    for (double x : v) vmax = std::max(vmax, x);
    const double floor = std::max(1e-12 * vmax, 1e-300);
    double t_lo = t.back() / 2.0;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int cnt = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] < t_lo || v[i] < floor) continue;
        double x = t[i], y = std::log(v[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++cnt;
    }
    if (cnt >= 2 && sxx * cnt - sx * sx > 1e-12) {
        out.slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
    }
    int tail_n = std::min<std::size_t>(5, v.size());
    for (int i = 0; i < tail_n; ++i) out.end_level += v[v.size() - 1 - i];
    out.end_level /= tail_n;
    return out;
}

}  // namespace

std::optional<ReturnEvent> first_return(const Submanifold& H, const PhasePoint& rho,
                                        double T_max, double eps, bool backward) {
    if (T_max <= 0 || eps <= 0) throw Error("first_return needs T_max > 0 and eps > 0");
    if (snh_distance(H, rho) > 1e-6)
        throw NotConormal("first_return starts on SN*H (within 1e-6)");
    return first_return_core(H, rho, T_max, eps, backward);
}

std::vector<ReturnEvent> return_orbit(const Submanifold& H, const PhasePoint& rho,
                                      int k_max, double T_max, double eps, bool backward) {
    if (snh_distance(H, rho) > 1e-6)
        throw NotConormal("return_orbit starts on SN*H (within 1e-6)");
    std::vector<ReturnEvent> events;
    PhasePoint cur = rho;
    double elapsed = 0.0;
    while (static_cast<int>(events.size()) < k_max && elapsed < T_max) {
        auto ev = first_return_core(H, cur, T_max - elapsed, eps, backward);
        if (!ev) break;
        elapsed += ev->t;
        cur = ev->rho_out;
        events.push_back({elapsed, ev->rho_out, ev->miss_distance});
    }
    return events;
}

RecurrenceProfile recurrence_profile(const Submanifold& H, std::size_t N, double T,
                                     double eps_detect, std::uint64_t seed) {
    if (N < 1) throw Error("recurrence profile needs N >= 1");
    const ManifoldModel& model = H.model();
    auto set = sample_snh(H, N, seed);
    RecurrenceProfile prof;
    prof.d_forward.reserve(N);
    prof.d_backward.reserve(N);
    const double inf = std::numeric_limits<double>::infinity();
    for (const auto& s : set.samples) {
        for (int dir = 0; dir < 2; ++dir) {
            PhasePoint start = dir == 0 ? s.point : reverse_direction(model, s.point);
            double best = inf;
            scan_snh_approaches(H, start, 0.0, T, eps_detect / 4.0, eps_detect,
                                [&](double t, double) {
                                    if (t <= eps_detect) return true;
                                    PhasePoint out = flow(model, start, t);
                                    if (dir == 1) out = reverse_direction(model, out);
                                    try {
                                        best = std::min(
                                            best, sasaki_distance(model, out, s.point));
                                    } catch (const CutLocus&) {
                                        // Antipodal to the start: not a self-return.
                                    }
                                    return true;
                                });
            (dir == 0 ? prof.d_forward : prof.d_backward).push_back(best);
        }
        prof.weights.push_back(s.weight);
        prof.total_weight += s.weight;
    }
    return prof;
}

double RecurrenceProfile::fraction(double eps) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i)
        if (d_forward[i] < eps && d_backward[i] < eps) acc += weights[i];
    return total_weight > 0 ? acc / total_weight : 0.0;
}

double recurrence_fraction(const Submanifold& H, std::size_t N, double T, double eps,
                           std::uint64_t seed) {
    return recurrence_profile(H, N, T, eps, seed).fraction(eps);
}

StableSplitting stable_subspaces(const ManifoldModel& model, const PhasePoint& rho,
                                 double T_horizon) {
    if (model.kind() != ModelKind::HyperbolicSurface)
        throw NotAnosov("stable/unstable splitting requires the hyperbolic model");
    if (T_horizon < 5.0) throw Error("splitting horizon must be at least 5");
    T_horizon = std::min(T_horizon, 100.0);
    geometry::validate(model, rho);
    auto iterate = [&](double sign) {
        // Power iteration of the Jacobi propagator over time sign*T: converges
        // to the direction most contracted in the opposite time direction.
        double c = std::cosh(T_horizon), s = sign * std::sinh(T_horizon);
        double v0 = 0.31622776601683794, v1 = 0.9486832980505138;
        for (int it = 0; it < 4; ++it) {
            double w0 = c * v0 + s * v1;
            double w1 = s * v0 + c * v1;
            double nrm = std::hypot(w0, w1);
            v0 = w0 / nrm;
            v1 = w1 / nrm;
        }
        if (v0 < 0 || (v0 == 0 && v1 < 0)) {
            v0 = -v0;
            v1 = -v1;
        }
        return std::array<double, 2>{v0, v1};
    };
    StableSplitting out;
    out.e_minus = iterate(-1.0);  // expanded backward = contracted forward
    out.e_plus = iterate(+1.0);
    return out;
}

SplittingReport classify_splitting(const Submanifold& H, const PhasePoint& rho, double tol) {
    const ManifoldModel& model = H.model();
    if (model.kind() != ModelKind::HyperbolicSurface)
        throw NotAnosov("splitting classification requires the hyperbolic model");
    auto near = conormal::snh_nearest(H, rho);
    if (near.dist > 1e-6) throw NotConormal("phase point is not on SN*H");

    StableSplitting lines = stable_subspaces(model, rho, 12.0);
    double tan0, tan1;
    if (H.dim() == 1) {
        double kappa = near.fiber * H.signed_curvature(near.u);
        tan0 = 1.0;
        tan1 = -kappa;
    } else {
        tan0 = 0.0;  // the fiber tangent of a point is vertical
        tan1 = 1.0;
    }
    double a_plus = angle_between_lines(tan0, tan1, lines.e_plus[0], lines.e_plus[1]);
    double a_minus = angle_between_lines(tan0, tan1, lines.e_minus[0], lines.e_minus[1]);

    SplittingReport rep;
    rep.m_plus = a_plus < tol ? 1 : 0;
    rep.m_minus = a_minus < tol ? 1 : 0;
    rep.in_mixed = rep.m_plus >= 1 && rep.m_minus >= 1;
    rep.in_split = rep.m_plus + rep.m_minus >= 1;  // a matched line spans T(SN*H)
    rep.in_A = rep.in_mixed && rep.in_split;
    rep.in_N = rep.in_mixed || rep.in_split;
    rep.residual = std::min(a_plus, a_minus);
    return rep;
}

double volume_growth(const Submanifold& H, const WeightedSampleSet& A, double t) {
    if (A.samples.empty()) throw Error("volume growth needs a nonempty sample set");
    if (A.tag == conormal::MeasureTag::Mu)
        throw NotConormal("volume growth expects samples on SN*H");
    const ManifoldModel& model = H.model();
    double acc = 0.0, wsum = 0.0;
    for (const auto& s : A.samples) {
        auto frame = snh_frame(H, s.u, s.fiber);
        // Frame degeneracy check on the full Sasaki Gram at t = 0.
        double g0 = 0.0;
        for (const auto& f : frame)
            g0 += f.horizontal.squared_norm() + f.vertical.squared_norm();
        if (g0 < 1e-10) throw DegenerateTangent("conormal frame is singular at t = 0");
        for (auto& f : frame) f = geometry::dflow(model, s.point, f, t);
        acc += s.weight * horizontal_gram_sqrt(frame);
        wsum += s.weight;
    }
    return acc / wsum;
}

IntegrabilityReport integrability_report(const Submanifold& H, const WeightedSampleSet& A,
                                         double T_max, double quad_step) {
    if (T_max <= 0 || quad_step <= 0) throw Error("integrability needs T_max, step > 0");
    IntegrabilityReport rep;
    std::vector<double> ts, fwd, bwd;
    for (double t = 0.0; t <= T_max + 1e-12; t += quad_step) {
        ts.push_back(std::min(t, T_max));
        fwd.push_back(volume_growth(H, A, ts.back()));
        bwd.push_back(volume_growth(H, A, -ts.back()));
    }
    auto trapezoid = [&](const std::vector<double>& v) {
        double total = 0.0;
        for (std::size_t i = 1; i < v.size(); ++i)
            total += 0.5 * (v[i] + v[i - 1]) * (ts[i] - ts[i - 1]);
        return total;
    };
    rep.integral_forward = trapezoid(fwd);
    rep.integral_backward = trapezoid(bwd);
    rep.volume_integral_forward = rep.integral_forward * A.total_mass;
    rep.volume_integral_backward = rep.integral_backward * A.total_mass;

    auto tail_f = fit_log_tail(ts, fwd);
    auto tail_b = fit_log_tail(ts, bwd);
    rep.tail_slope_forward = tail_f.slope;
    rep.tail_slope_backward = tail_b.slope;
    auto certify = [](const TailFit& tf, double integral) {
        if (tf.slope >= -0.05) return false;
        double tail_mass = tf.end_level / std::abs(tf.slope);
        return tail_mass < 0.01 * integral;
    };
    rep.certified_forward = certify(tail_f, rep.integral_forward);
    rep.certified_backward = certify(tail_b, rep.integral_backward);
    if (rep.certified_forward && rep.certified_backward)
        rep.verdict = "recurrent-measure-zero certified (both)";
    else if (rep.certified_forward)
        rep.verdict = "recurrent-measure-zero certified (forward)";
    else if (rep.certified_backward)
        rep.verdict = "recurrent-measure-zero certified (backward)";
    else
        rep.verdict = "not certified";
    return rep;
}

std::vector<Vec> flow_submanifold(const Submanifold& H, double t, std::size_t N) {
    auto set = sample_snh(H, N, 0);
    std::vector<Vec> cloud;
    cloud.reserve(set.samples.size());
    for (const auto& s : set.samples) cloud.push_back(flow(H.model(), s.point, t).x);
    return cloud;
}

double self_recurrence_fraction(const ManifoldModel& model, const WeightedSampleSet& start,
                                double T, double eps) {
    if (T <= 0 || eps <= 0) throw Error("self recurrence needs T, eps > 0");
    const double step = eps / 4.0;
    double acc = 0.0, wsum = 0.0;
    for (const auto& s : start.samples) {
        wsum += s.weight;
        PhasePoint cur = s.point;
        double t = 0.0;
        bool recurrent = false;
        while (t < T) {
            double dt = std::min(step, T - t);
            cur = flow(model, cur, dt);
            t += dt;
            if (t < eps) continue;  // still leaving the initial ball
            if (geometry::distance(model, cur.x, s.point.x) < eps &&
                sasaki_distance(model, cur, s.point) < eps) {
                recurrent = true;
                break;
            }
        }
        if (recurrent) acc += s.weight;
    }
    return wsum > 0 ? acc / wsum : 0.0;
}

}  // namespace clab::dynamics
