#include "conormal_lab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

namespace clab::spectral {

using geometry::ModelKind;

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

// Legendre P_l by the stable three-term recurrence.
double legendre(int l, double x) {
    if (l == 0) return 1.0;
    double pm = 1.0, p = x;
    for (int k = 2; k <= l; ++k) {
        double pn = ((2.0 * k - 1.0) * x * p - (k - 1.0) * pm) / k;
        pm = p;
        p = pn;
    }
    return p;
}

// (1 - x^2) P_l'(x) = l (P_{l-1}(x) - x P_l(x)).
double legendre_derivative(int l, double x) {
    if (l == 0) return 0.0;
    double denom = 1.0 - x * x;
    if (std::abs(denom) < 1e-12) {
        // P_l'(+-1) = (+-1)^{l+1} l(l+1)/2
        double sign = (l % 2 == 0) ? x : 1.0;
        return sign * 0.5 * l * (l + 1.0);
    }
    return l * (legendre(l - 1, x) - x * legendre(l, x)) / denom;
}

struct GaussRule {
    std::vector<double> nodes;    // on [-1, 1]
    std::vector<double> weights;
};

const GaussRule& gauss_legendre(int n) {
    static std::mutex mutex;
    static std::map<int, GaussRule> cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    GaussRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int k = 0; k < n; ++k) {
        double x = std::cos(kPi * (k + 0.75) / (n + 0.5));
        for (int iter = 0; iter < 100; ++iter) {
            double f = legendre(n, x);
            double df = legendre_derivative(n, x);
            double dx = f / df;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        double df = legendre_derivative(n, x);
        rule.nodes[k] = x;
        rule.weights[k] = 2.0 / ((1.0 - x * x) * df * df);
    }
    return cache.emplace(n, std::move(rule)).first->second;
}

double sectoral_norm_const(int l) {
    // |c_l|^2 = (1/4pi) prod_{j=1..l} (2j+1)/(2j)
    double log_prod = 0.0;
    for (int j = 1; j <= l; ++j) log_prod += std::log((2.0 * j + 1.0) / (2.0 * j));
    return std::exp(0.5 * (log_prod - std::log(4.0 * kPi)));
}

// L^2 norm over S^2 of an axisymmetric-envelope mode, by exact quadrature in
// cos(theta).
double sphere_l2_norm(const EigenMode& mode) {
    int order = mode.degree() + 2;
    const GaussRule& rule = gauss_legendre(order);
    double acc = 0.0;
    for (int k = 0; k < order; ++k) {
        double c = rule.nodes[k];
        double s = std::sqrt(std::max(0.0, 1.0 - c * c));
        Vec x{s, 0.0, c};
        acc += rule.weights[k] * std::norm(mode.eval(x));
    }
    return std::sqrt(2.0 * kPi * acc);
}

double riemannian_speed(const Submanifold& H, double u) {
    double sp = H.velocity(u).norm();
    if (H.model().kind() == ModelKind::HyperbolicSurface) sp /= H.at(u)[1];
    return sp;
}

void check_mode_model(const Submanifold& H, const EigenMode& mode) {
    bool torus = H.model().kind() == ModelKind::FlatTorus;
    bool is_wave = mode.kind() == ModeKind::TorusPlaneWave;
    if (torus != is_wave) throw ModelMismatch("mode and submanifold live on different models");
    if (!torus && H.model().kind() != ModelKind::RoundSphere)
        throw ModelMismatch("eigenmodes are provided on the torus and the sphere");
}

}  // namespace

EigenMode EigenMode::plane_wave(const ManifoldModel& model, const std::vector<int>& m) {
    if (model.kind() != ModelKind::FlatTorus) throw ModelMismatch("plane waves live on tori");
    if (static_cast<int>(m.size()) != model.dim())
        throw ModelMismatch("lattice vector dimension mismatch");
    double norm2 = 0;
    for (int c : m) norm2 += double(c) * c;
    if (norm2 == 0) throw Error("lattice vector must be nonzero");
    EigenMode mode;
    mode.kind_ = ModeKind::TorusPlaneWave;
    mode.m_ = m;
    mode.h_ = 1.0 / (2.0 * kPi * std::sqrt(norm2));
    return mode;
}

EigenMode EigenMode::zonal(const ManifoldModel& model, int l) {
    if (model.kind() != ModelKind::RoundSphere || model.dim() != 2)
        throw ModelMismatch("zonal harmonics are provided on S^2");
    if (l < 1) throw Error("degree must be at least 1");
    EigenMode mode;
    mode.kind_ = ModeKind::SphereZonal;
    mode.degree_ = l;
    mode.h_ = 1.0 / std::sqrt(double(l) * (l + 1.0));
    mode.norm_const_ = std::sqrt((2.0 * l + 1.0) / (4.0 * kPi));
    double nrm = sphere_l2_norm(mode);
    if (std::abs(nrm - 1.0) > 1e-8) throw Error("zonal mode failed its normalization check");
    return mode;
}

EigenMode EigenMode::sectoral(const ManifoldModel& model, int l) {
    if (model.kind() != ModelKind::RoundSphere || model.dim() != 2)
        throw ModelMismatch("sectoral harmonics are provided on S^2");
    if (l < 1) throw Error("degree must be at least 1");
    EigenMode mode;
    mode.kind_ = ModeKind::SphereSectoral;
    mode.degree_ = l;
    mode.h_ = 1.0 / std::sqrt(double(l) * (l + 1.0));
    mode.norm_const_ = sectoral_norm_const(l);
    double nrm = sphere_l2_norm(mode);
    if (std::abs(nrm - 1.0) > 1e-8) throw Error("sectoral mode failed its normalization check");
    return mode;
}

std::complex<double> EigenMode::eval(const Vec& x) const {
    switch (kind_) {
        case ModeKind::TorusPlaneWave: {
            double phase = 0.0;
            for (std::size_t i = 0; i < m_.size(); ++i) phase += m_[i] * x[i];
            return std::polar(1.0, 2.0 * kPi * phase);
        }
        case ModeKind::SphereZonal:
            return norm_const_ * legendre(degree_, x[2]);
        case ModeKind::SphereSectoral: {
            std::complex<double> w(x[0], x[1]);
            return norm_const_ * std::pow(w, degree_);
        }
    }
    return 0.0;
}

std::complex<double> EigenMode::h_directional_derivative(const Vec& x, const Vec& nu) const {
    switch (kind_) {
        case ModeKind::TorusPlaneWave: {
            double mdotnu = 0.0;
            for (std::size_t i = 0; i < m_.size(); ++i) mdotnu += m_[i] * nu[i];
            return h_ * std::complex<double>(0.0, 2.0 * kPi * mdotnu) * eval(x);
        }
        case ModeKind::SphereZonal: {
            // grad P_l(x3) restricted to the sphere, paired with tangent nu.
            double dp = legendre_derivative(degree_, x[2]);
            return h_ * norm_const_ * dp * nu[2];
        }
        case ModeKind::SphereSectoral: {
            std::complex<double> w(x[0], x[1]);
            std::complex<double> grad = norm_const_ * double(degree_) *
                                        std::pow(w, degree_ - 1);
            return h_ * grad * std::complex<double>(nu[0], nu[1]);
        }
    }
    return 0.0;
}

namespace {

// Composite Gauss-Legendre with `panels` panels over [a, b] in parameter.
std::complex<double> quad_interval(const Submanifold& H, double a, double b, const Weight& w,
                                   const std::function<std::complex<double>(double)>& f,
                                   int panels) {
    const GaussRule& rule = gauss_legendre(16);
    std::complex<double> acc = 0.0;
    for (int p = 0; p < panels; ++p) {
        double pa = a + (b - a) * p / panels;
        double pb = a + (b - a) * (p + 1) / panels;
        double half = 0.5 * (pb - pa), mid = 0.5 * (pa + pb);
        for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
            double u = mid + half * rule.nodes[k];
            acc += rule.weights[k] * half * w(u) * f(u) * riemannian_speed(H, u);
        }
    }
    return acc;
}

int interval_panels(const Submanifold& H, const Interval& iv, double h) {
    if (!(iv.b > iv.a)) throw Error("interval must have positive length");
    double arclen = (iv.b - iv.a) * H.length();
    return std::max(2, static_cast<int>(std::ceil(arclen / (2.0 * kPi * h) / 2.0)));
}

std::complex<double> converged_average(const Submanifold& H, std::span<const Interval> A,
                                       const Weight& w, double h,
                                       const std::function<std::complex<double>(double)>& f) {
    if (H.dim() == 0) return w(0.0) * f(0.0);
    std::complex<double> v1 = 0.0, v2 = 0.0;
    for (const Interval& iv : A) {
        int panels = interval_panels(H, iv, h);
        v1 += quad_interval(H, iv.a, iv.b, w, f, panels);
        v2 += quad_interval(H, iv.a, iv.b, w, f, 2 * panels);
    }
    if (std::abs(v2 - v1) > 1e-8 * std::abs(v2) + 1e-12)
        throw QuadratureNotConverged("node doubling moved the average beyond 1e-8 relative");
    return v2;
}

}  // namespace

int average_node_count(const Submanifold& H, std::span<const Interval> A, double h) {
    if (H.dim() == 0) return 1;
    int nodes = 0;
    for (const Interval& iv : A) nodes += 2 * interval_panels(H, iv, h) * 16;
    return nodes;
}

std::complex<double> average(const Submanifold& H, std::span<const Interval> A, const Weight& w,
                             const EigenMode& mode) {
    check_mode_model(H, mode);
    if (H.dim() == 0) return w(0.0) * mode.eval(H.base_point());
    auto f = [&](double u) { return mode.eval(H.at(u)); };
    return converged_average(H, A, w, mode.h(), f);
}

std::complex<double> normal_average(const Submanifold& H, std::span<const Interval> A,
                                    const Weight& w, const EigenMode& mode) {
    if (H.codim() != 1) throw NotHypersurface("normal averages need a hypersurface");
    check_mode_model(H, mode);
    auto f = [&](double u) { return mode.h_directional_derivative(H.at(u), H.unit_normal(u)); };
    return converged_average(H, A, w, mode.h(), f);
}

ScalingReport fit_power_law(const std::vector<double>& h, const std::vector<double>& values) {
    if (h.size() != values.size()) throw Error("h and value lists must have matching length");
    ScalingReport rep;
    double vmax = 0.0;
    for (double v : values) vmax = std::max(vmax, std::abs(v));
    if (vmax < 1e-13) throw AllValuesZero("every value in the sweep is zero");
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < h.size(); ++i) {
        if (std::abs(values[i]) < std::max(1e-12 * vmax, 1e-13)) {
            ++rep.n_dropped;
            continue;
        }
        lx.push_back(std::log(h[i]));
        ly.push_back(std::log(std::abs(values[i])));
        rep.h_values.push_back(h[i]);
        rep.abs_values.push_back(std::abs(values[i]));
    }
    if (lx.size() < 2) throw AllValuesZero("not enough nonzero values to fit an exponent");
    double n = double(lx.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sx += lx[i];
        sy += ly[i];
        sxx += lx[i] * lx[i];
        sxy += lx[i] * ly[i];
        syy += ly[i] * ly[i];
    }
    double denom = n * sxx - sx * sx;
    rep.alpha = (n * sxy - sx * sy) / denom;
    rep.intercept = (sy - rep.alpha * sx) / n;
    double ss_res = 0.0, ss_tot = 0.0, ybar = sy / n;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        double fit = rep.alpha * lx[i] + rep.intercept;
        rep.residuals.push_back(ly[i] - fit);
        ss_res += (ly[i] - fit) * (ly[i] - fit);
        ss_tot += (ly[i] - ybar) * (ly[i] - ybar);
    }
    rep.r_squared = ss_tot > 1e-30 ? std::max(0.0, 1.0 - ss_res / ss_tot) : 1.0;
    return rep;
}

ScalingReport sweep_and_fit(const Submanifold& H, std::span<const Interval> A, const Weight& w,
                            const std::vector<EigenMode>& family, bool use_normal) {
    if (family.size() < 4) throw Error("a sweep needs at least 4 frequencies");
    for (std::size_t i = 1; i < family.size(); ++i)
        if (family[i].h() >= family[i - 1].h())
            throw Error("sweep frequencies must be strictly increasing");
    std::vector<double> hs, vals;
    for (const EigenMode& mode : family) {
        std::complex<double> v =
            use_normal ? normal_average(H, A, w, mode) : average(H, A, w, mode);
        hs.push_back(mode.h());
        vals.push_back(std::abs(v));
    }
    return fit_power_law(hs, vals);
}

}  // namespace clab::spectral
