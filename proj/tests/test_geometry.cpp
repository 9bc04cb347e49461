#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "conormal_lab/geometry.hpp"
#include "conormal_lab/rng.hpp"

using namespace clab;
using namespace clab::geometry;

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

PhasePoint random_phase_point(const ManifoldModel& model, StreamRng& rng) {
    switch (model.kind()) {
        case ModelKind::FlatTorus: {
            double th = rng.uniform(0.0, 2 * kPi);
            return make_phase_point(model, Vec{rng.uniform(), rng.uniform()},
                                    Vec{std::cos(th), std::sin(th)});
        }
        case ModelKind::RoundSphere: {
            double z = rng.uniform(-1.0, 1.0);
            double phi = rng.uniform(0.0, 2 * kPi);
            double r = std::sqrt(std::max(0.0, 1.0 - z * z));
            Vec x{r * std::cos(phi), r * std::sin(phi), z};
            Vec a{0.0, 0.0, 0.0};
            a[std::abs(x[0]) < 0.9 ? 0 : 1] = 1.0;
            Vec e1 = (a - dot(a, x) * x).normalized();
            Vec e2{x[1] * e1[2] - x[2] * e1[1], x[2] * e1[0] - x[0] * e1[2],
                   x[0] * e1[1] - x[1] * e1[0]};
            double th = rng.uniform(0.0, 2 * kPi);
            return make_phase_point(model, x, std::cos(th) * e1 + std::sin(th) * e2);
        }
        case ModelKind::HyperbolicSurface: {
            std::complex<double> z(rng.uniform(-0.5, 0.5), rng.uniform(0.6, 1.6));
            return hyperbolic_phase_point(model, z, rng.uniform(0.0, 2 * kPi));
        }
    }
    return {};
}

}  // namespace

TEST_CASE("flow moves along great circles on the sphere") {
    auto model = ManifoldModel::sphere(2);
    auto rho = make_phase_point(model, Vec{1, 0, 0}, Vec{0, 1, 0});
    auto out = flow(model, rho, kPi / 2);
    CHECK(std::abs(out.x[0]) < 1e-12);
    CHECK(out.x[1] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(out.xi[0] == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(std::abs(out.xi[1]) < 1e-12);
}

TEST_CASE("flow translates mod 1 on the torus") {
    auto model = ManifoldModel::torus(2);
    auto rho = make_phase_point(model, Vec{0.5, 0.5}, Vec{0, 1});
    auto out = flow(model, rho, 0.75);
    CHECK(out.x[0] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(out.x[1] == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(out.xi[1] == doctest::Approx(1.0));
}

TEST_CASE("flow climbs vertical geodesics on the hyperbolic surface") {
    auto model = ManifoldModel::bolza();
    auto rho = hyperbolic_phase_point(model, {0.0, 1.0}, kPi / 2);
    auto out = flow(model, rho, std::log(2.0));
    CHECK(out.x[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(out.x[1] == doctest::Approx(2.0).epsilon(1e-12));
    // Still pointing up.
    CHECK(out.xi[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(out.xi[1] * out.x[1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("flow group law holds at random phase points") {
    StreamRng rng(101, 0);
    for (const auto& model :
         {ManifoldModel::torus(2), ManifoldModel::sphere(2), ManifoldModel::bolza()}) {
        for (int i = 0; i < 333; ++i) {
            auto rho = random_phase_point(model, rng);
            double s = rng.uniform(-3.0, 3.0), t = rng.uniform(-3.0, 3.0);
            auto a = flow(model, flow(model, rho, s), t);
            auto b = flow(model, rho, s + t);
            CHECK(sasaki_distance(model, a, b) < 1e-8);
        }
    }
}

TEST_CASE("cosphere condition is preserved along long orbits") {
    StreamRng rng(55, 0);
    for (const auto& model :
         {ManifoldModel::torus(2), ManifoldModel::sphere(2), ManifoldModel::bolza()}) {
        auto rho = random_phase_point(model, rng);
        for (double t : {-100.0, -31.4, 10.0, 100.0}) {
            auto out = flow(model, rho, t);
            if (model.kind() == ModelKind::HyperbolicSurface) {
                CHECK(std::abs(out.frame.det() - 1.0) < 1e-10);
                CHECK(std::abs(out.xi.norm() * out.x[1] - 1.0) < 1e-10);
            } else {
                CHECK(std::abs(out.xi.norm() - 1.0) < 1e-10);
            }
        }
    }
}

TEST_CASE("dflow solves the constant-curvature Jacobi equation") {
    auto sphere = ManifoldModel::sphere(2);
    StreamRng rng(7, 0);
    auto rho_s = random_phase_point(sphere, rng);
    auto out = dflow(sphere, rho_s, {Vec{0.0}, Vec{1.0}}, kPi / 2);
    CHECK(out.horizontal[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(out.vertical[0]) < 1e-12);

    auto bolza = ManifoldModel::bolza();
    auto rho_h = random_phase_point(bolza, rng);
    auto stable = dflow(bolza, rho_h, {Vec{1.0}, Vec{-1.0}}, 3.0);
    CHECK(stable.horizontal[0] == doctest::Approx(std::exp(-3.0)).epsilon(1e-9));
    CHECK(stable.vertical[0] == doctest::Approx(-std::exp(-3.0)).epsilon(1e-9));

    auto torus = ManifoldModel::torus(2);
    auto rho_t = random_phase_point(torus, rng);
    auto lin = dflow(torus, rho_t, {Vec{1.0}, Vec{2.0}}, 3.0);
    CHECK(lin.horizontal[0] == doctest::Approx(7.0));
    CHECK(lin.vertical[0] == doctest::Approx(2.0));

    // Degenerate data propagates to itself; not an error.
    auto zero = dflow(bolza, rho_h, {Vec{0.0}, Vec{0.0}}, 4.0);
    CHECK(zero.horizontal[0] == 0.0);
    CHECK(zero.vertical[0] == 0.0);
}

TEST_CASE("dflow is linear and satisfies the cocycle identity") {
    StreamRng rng(13, 0);
    for (const auto& model :
         {ManifoldModel::torus(2), ManifoldModel::sphere(2), ManifoldModel::bolza()}) {
        auto rho = random_phase_point(model, rng);
        TangentPerturbation v{Vec{rng.uniform(-1, 1)}, Vec{rng.uniform(-1, 1)}};
        TangentPerturbation w{Vec{rng.uniform(-1, 1)}, Vec{rng.uniform(-1, 1)}};
        double a = rng.uniform(-2, 2), b = rng.uniform(-2, 2), t = rng.uniform(-4, 4);

        TangentPerturbation combo{a * v.horizontal + b * w.horizontal,
                                  a * v.vertical + b * w.vertical};
        auto lhs = dflow(model, rho, combo, t);
        auto va = dflow(model, rho, v, t), wb = dflow(model, rho, w, t);
        CHECK(std::abs(lhs.horizontal[0] - (a * va.horizontal[0] + b * wb.horizontal[0])) <
              1e-10);
        CHECK(std::abs(lhs.vertical[0] - (a * va.vertical[0] + b * wb.vertical[0])) < 1e-10);

        double s = rng.uniform(-3, 3);
        auto two_step = dflow(model, flow(model, rho, s), dflow(model, rho, v, s), t);
        auto direct = dflow(model, rho, v, s + t);
        CHECK(std::abs(two_step.horizontal[0] - direct.horizontal[0]) < 1e-9);
        CHECK(std::abs(two_step.vertical[0] - direct.vertical[0]) < 1e-9);
    }
}

TEST_CASE("hyperbolic contraction matches the Anosov bound with C = 1") {
    auto model = ManifoldModel::bolza();
    StreamRng rng(23, 0);
    auto rho = random_phase_point(model, rng);
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    for (double t : {1.0, 2.0, 3.0, 4.0, 5.0}) {
        auto out = dflow(model, rho, {Vec{inv_sqrt2}, Vec{-inv_sqrt2}}, t);
        double ratio = std::hypot(out.horizontal[0], out.vertical[0]);
        CHECK(ratio == doctest::Approx(std::exp(-t)).epsilon(1e-9));
    }
}

TEST_CASE("higher-dimensional tori flow and transport componentwise") {
    auto t3 = ManifoldModel::torus(3);
    Vec xi = Vec{2.0, -1.0, 2.0}.normalized();
    auto rho = make_phase_point(t3, Vec{0.1, 0.2, 0.9}, xi);
    auto out = flow(t3, rho, 1.5);
    for (std::size_t i = 0; i < 3; ++i) {
        double expect = rho.x[i] + 1.5 * xi[i];
        expect -= std::floor(expect);
        CHECK(out.x[i] == doctest::Approx(expect).epsilon(1e-12));
    }
    StreamRng rng(91, 0);
    for (int i = 0; i < 100; ++i) {
        double s = rng.uniform(-4, 4), t = rng.uniform(-4, 4);
        auto a = flow(t3, flow(t3, rho, s), t);
        auto b = flow(t3, rho, s + t);
        CHECK(sasaki_distance(t3, a, b) < 1e-8);
    }
    // Jacobi data carries n-1 = 2 normal components.
    auto lin = dflow(t3, rho, {Vec{1.0, 0.5}, Vec{2.0, -1.0}}, 2.0);
    CHECK(lin.horizontal[0] == doctest::Approx(5.0));
    CHECK(lin.horizontal[1] == doctest::Approx(-1.5));
    CHECK_THROWS_AS(dflow(t3, rho, {Vec{1.0}, Vec{0.0}}, 1.0), InvalidPhasePoint);
}

TEST_CASE("distances are exact in all three models") {
    auto sphere = ManifoldModel::sphere(2);
    CHECK(distance(sphere, Vec{1, 0, 0}, Vec{0, 1, 0}) == doctest::Approx(kPi / 2));

    auto torus = ManifoldModel::torus(2);
    CHECK(distance(torus, Vec{0.1, 0.0}, Vec{0.9, 0.0}) == doctest::Approx(0.2));

    auto bolza = ManifoldModel::bolza();
    CHECK(distance(bolza, Vec{0.0, 1.0}, Vec{0.0, 2.0}) == doctest::Approx(std::log(2.0)));
}

TEST_CASE("sasaki distance separates base and fiber parts") {
    auto sphere = ManifoldModel::sphere(2);
    auto r1 = make_phase_point(sphere, Vec{1, 0, 0}, Vec{0, 1, 0});
    auto r2 = make_phase_point(sphere, Vec{1, 0, 0}, Vec{0, 0, 1});
    CHECK(sasaki_distance(sphere, r1, r1) == doctest::Approx(0.0));
    CHECK(sasaki_distance(sphere, r1, r2) == doctest::Approx(kPi / 2));

    auto torus = ManifoldModel::torus(2);
    auto t1 = make_phase_point(torus, Vec{0.0, 0.0}, Vec{1, 0});
    auto t2 = make_phase_point(torus, Vec{0.3, 0.0}, Vec{1, 0});
    CHECK(sasaki_distance(torus, t1, t2) == doctest::Approx(0.3));
}

TEST_CASE("sasaki distance is symmetric") {
    StreamRng rng(31, 0);
    for (const auto& model :
         {ManifoldModel::torus(2), ManifoldModel::sphere(2), ManifoldModel::bolza()}) {
        for (int i = 0; i < 100; ++i) {
            auto a = random_phase_point(model, rng);
            auto b = random_phase_point(model, rng);
            double ab = sasaki_distance(model, a, b);
            double ba = sasaki_distance(model, b, a);
            CHECK(std::abs(ab - ba) < 1e-9);
        }
    }
}

TEST_CASE("antipodal sphere transport reports the cut locus") {
    auto sphere = ManifoldModel::sphere(2);
    auto a = make_phase_point(sphere, Vec{0, 0, 1}, Vec{1, 0, 0});
    auto b = make_phase_point(sphere, Vec{0, 0, -1}, Vec{1, 0, 0});
    CHECK_THROWS_AS(sasaki_distance(sphere, a, b), CutLocus);
}

TEST_CASE("invalid phase points are rejected") {
    auto sphere = ManifoldModel::sphere(2);
    CHECK_THROWS_AS(make_phase_point(sphere, Vec{1, 0, 0}, Vec{1, 0, 0}), InvalidPhasePoint);
    CHECK_THROWS_AS(make_phase_point(sphere, Vec{2, 0, 0}, Vec{0, 1, 0}), InvalidPhasePoint);
    auto torus = ManifoldModel::torus(2);
    CHECK_THROWS_AS(make_phase_point(torus, Vec{0.0, 0.0}, Vec{0.5, 0.0}), InvalidPhasePoint);
    PhasePoint rho = make_phase_point(torus, Vec{0.0, 0.0}, Vec{1.0, 0.0});
    CHECK_THROWS_AS(flow(sphere, rho, 1.0), InvalidPhasePoint);
}

TEST_CASE("bolza generators have unit determinant and pair octagon sides") {
    auto model = ManifoldModel::bolza();
    CHECK(model.generators().size() == 8);
    const std::complex<double> i0(0.0, 1.0);
    const double side = 2.0 * std::acosh(1.0 + std::sqrt(2.0));
    for (const auto& g : model.generators()) {
        CHECK(std::abs(g.det() - 1.0) < 1e-12);
        CHECK(halfplane_distance(g.moebius(i0), i0) == doctest::Approx(side).epsilon(1e-12));
    }
}

TEST_CASE("quotient distances are invariant under deck transformations") {
    auto model = ManifoldModel::bolza();
    StreamRng rng(41, 0);
    for (int i = 0; i < 60; ++i) {
        std::complex<double> z(rng.uniform(-0.5, 0.5), rng.uniform(0.6, 1.6));
        std::complex<double> w(rng.uniform(-0.5, 0.5), rng.uniform(0.6, 1.6));
        double d = hyperbolic_quotient_distance(model, z, w);
        for (const auto& g : model.generators()) {
            double dg = hyperbolic_quotient_distance(model, z, g.moebius(w));
            CHECK(std::abs(d - dg) < 1e-9);
        }
        // Symmetry on the quotient.
        CHECK(std::abs(d - hyperbolic_quotient_distance(model, w, z)) < 1e-9);
    }
}

TEST_CASE("fundamental-domain reduction is idempotent and distance-minimizing") {
    auto model = ManifoldModel::bolza();
    StreamRng rng(77, 0);
    const std::complex<double> i0(0.0, 1.0);
    for (int i = 0; i < 50; ++i) {
        auto rho = random_phase_point(model, rng);
        auto far = flow(model, rho, rng.uniform(5.0, 40.0));
        std::complex<double> z = frame_position(far.frame);
        // No generator moves the reduced point closer to i.
        double d0 = halfplane_distance(z, i0);
        for (const auto& g : model.generators())
            CHECK(halfplane_distance(g.moebius(z), i0) > d0 - 1e-12);
    }
}
