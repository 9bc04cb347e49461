#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "conormal_lab/dynamics.hpp"
#include "conormal_lab/rng.hpp"

using namespace clab;
using namespace clab::dynamics;
using conormal::sample_snh;
using conormal::sample_snh_side;
using conormal::Submanifold;
using geometry::make_phase_point;
using geometry::ManifoldModel;

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;
}

TEST_CASE("translation orbits return to a straight torus geodesic at integer times") {
    auto torus = ManifoldModel::torus(2);
    auto line = Submanifold::torus_geodesic(torus, 0, 1, Vec{0.0, 0.0});
    auto rho = make_phase_point(torus, Vec{0.0, 0.3}, Vec{1.0, 0.0});
    auto ev = first_return(line, rho, 2.0, 1e-3);
    REQUIRE(ev.has_value());
    CHECK(ev->t == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(ev->miss_distance < 1e-8);
    CHECK(geometry::sasaki_distance(torus, ev->rho_out, rho) < 1e-7);

    auto orbit = return_orbit(line, rho, 3, 10.0, 1e-3);
    REQUIRE(orbit.size() == 3);
    for (int k = 0; k < 3; ++k) {
        CHECK(orbit[k].t == doctest::Approx(double(k + 1)).epsilon(1e-8));
        CHECK(geometry::sasaki_distance(torus, orbit[k].rho_out, rho) < 1e-6);
        CHECK(orbit[k].miss_distance < 1e-3);  // every event stays eps-thin
    }
}

TEST_CASE("every direction from a sphere point returns after a full great circle") {
    auto sphere = ManifoldModel::sphere(2);
    auto pole = Submanifold::point(sphere, Vec{0.0, 0.0, 1.0});
    auto rho = make_phase_point(sphere, Vec{0.0, 0.0, 1.0}, Vec{1.0, 0.0, 0.0});
    auto ev = first_return(pole, rho, 7.0, 1e-3);
    REQUIRE(ev.has_value());
    CHECK(ev->t == doctest::Approx(2 * kPi).epsilon(1e-7));
    CHECK(ev->miss_distance < 1e-8);

    auto orbit = return_orbit(pole, rho, 2, 15.0, 1e-3);
    REQUIRE(orbit.size() == 2);
    CHECK(orbit[0].t == doctest::Approx(2 * kPi).epsilon(1e-7));
    CHECK(orbit[1].t == doctest::Approx(4 * kPi).epsilon(1e-7));
}

TEST_CASE("outward circle normals on the Bolza surface do not return quickly") {
    auto bolza = ManifoldModel::bolza();
    auto circle = Submanifold::geodesic_circle(bolza, 0.5);
    // Inward normals focus through the center and hit the far side exactly
    // conormally at t = 2r.
    auto inward = circle.conormal_point(0.3, 1.0);
    auto ev_in = first_return(circle, inward, 2.0, 1e-4);
    REQUIRE(ev_in.has_value());
    CHECK(ev_in->t == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(ev_in->miss_distance < 1e-8);

    auto outward = circle.conormal_point(0.3, -1.0);
    CHECK_FALSE(first_return(circle, outward, 5.0, 1e-4).has_value());

    auto empty = return_orbit(circle, outward, 3, 5.0, 1e-4);
    CHECK(empty.empty());
}

TEST_CASE("tightening eps never delays the detected first return") {
    auto torus = ManifoldModel::torus(2);
    auto circle = Submanifold::torus_circle(torus, Vec{0.5, 0.5}, 0.25);
    auto sphere = ManifoldModel::sphere(2);
    auto latitude = Submanifold::latitude_circle(sphere, 0.9);
    for (const auto& H : {circle, latitude}) {
        auto set = sample_snh(H, 20, 19);
        for (const auto& s : set.samples) {
            auto coarse = first_return(H, s.point, 4.0, 1e-2);
            auto fine = first_return(H, s.point, 4.0, 1e-3);
            if (fine && coarse) CHECK(fine->t <= coarse->t + 1e-6);
            if (coarse) CHECK(coarse->miss_distance < 1e-2);
            if (fine) CHECK(fine->miss_distance < 1e-3);
        }
    }
}

TEST_CASE("fully periodic conormal bundles are recurrent at every tolerance") {
    auto sphere = ManifoldModel::sphere(2);
    auto equator = Submanifold::equator(sphere);
    CHECK(recurrence_fraction(equator, 60, 2 * kPi + 1.0, 1e-2, 1) == 1.0);

    auto torus = ManifoldModel::torus(2);
    auto line = Submanifold::torus_geodesic(torus, 0, 1, Vec{0.0, 0.0});
    CHECK(recurrence_fraction(line, 60, 2.5, 1e-2, 1) == 1.0);
}

TEST_CASE("recurrence fractions are seed-deterministic and seed-stable") {
    auto bolza = ManifoldModel::bolza();
    auto circle = Submanifold::geodesic_circle(bolza, 0.5);
    double a = recurrence_fraction(circle, 100, 10.0, 0.2, 7);
    double b = recurrence_fraction(circle, 100, 10.0, 0.2, 7);
    CHECK(a == b);  // bitwise
    double c = recurrence_fraction(circle, 100, 10.0, 0.2, 8);
    CHECK(std::abs(a - c) <= 3.0 / std::sqrt(100.0));
}

TEST_CASE("recurrence profiles are monotone across the eps ladder") {
    auto bolza = ManifoldModel::bolza();
    auto circle = Submanifold::geodesic_circle(bolza, 0.5);
    auto prof = recurrence_profile(circle, 200, 12.0, 0.1, 3);
    double f1 = prof.fraction(0.1), f2 = prof.fraction(0.05), f3 = prof.fraction(0.025);
    CHECK(f1 >= f2);
    CHECK(f2 >= f3);
}

TEST_CASE("stable and unstable lines come out of power iteration exactly") {
    auto bolza = ManifoldModel::bolza();
    auto rho = geometry::hyperbolic_phase_point(bolza, {0.1, 1.2}, 0.4);
    auto split = stable_subspaces(bolza, rho, 12.0);
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    CHECK(split.e_minus[0] == doctest::Approx(inv_sqrt2).epsilon(1e-9));
    CHECK(split.e_minus[1] == doctest::Approx(-inv_sqrt2).epsilon(1e-9));
    CHECK(split.e_plus[0] == doctest::Approx(inv_sqrt2).epsilon(1e-9));
    CHECK(split.e_plus[1] == doctest::Approx(inv_sqrt2).epsilon(1e-9));

    // Contraction of the computed stable direction.
    geometry::TangentPerturbation v{Vec{split.e_minus[0]}, Vec{split.e_minus[1]}};
    auto w = geometry::dflow(bolza, rho, v, 5.0);
    CHECK(std::hypot(w.horizontal[0], w.vertical[0]) ==
          doctest::Approx(std::exp(-5.0)).epsilon(1e-6));

    auto sphere = ManifoldModel::sphere(2);
    auto rho_s = make_phase_point(sphere, Vec{0, 0, 1}, Vec{1, 0, 0});
    CHECK_THROWS_AS(stable_subspaces(sphere, rho_s, 12.0), NotAnosov);
    CHECK_THROWS_AS(stable_subspaces(bolza, rho, 1.0), Error);
}

TEST_CASE("splitting classification follows the curvature of the curve") {
    auto bolza = ManifoldModel::bolza();

    auto horo = Submanifold::horocycle(bolza, 1.0);
    auto rep = classify_splitting(horo, horo.conormal_point(0.5, 1.0));
    CHECK(rep.m_minus == 1);
    CHECK(rep.m_plus == 0);
    CHECK(rep.in_split);
    CHECK_FALSE(rep.in_mixed);
    CHECK(rep.in_N);
    CHECK_FALSE(rep.in_A);

    // The opposite side of the horocycle is unstable.
    auto rep_out = classify_splitting(horo, horo.conormal_point(0.5, -1.0));
    CHECK(rep_out.m_plus == 1);
    CHECK(rep_out.m_minus == 0);
    CHECK(rep_out.in_split);

    auto geo = Submanifold::hyperbolic_geodesic(bolza, 1.0);
    auto rep_g = classify_splitting(geo, geo.conormal_point(0.5, 1.0));
    CHECK(rep_g.m_plus == 0);
    CHECK(rep_g.m_minus == 0);
    CHECK_FALSE(rep_g.in_split);
    CHECK_FALSE(rep_g.in_mixed);

    auto circle = Submanifold::geodesic_circle(bolza, 0.8);
    auto rep_c = classify_splitting(circle, circle.conormal_point(0.2, 1.0));
    CHECK(rep_c.m_plus == 0);
    CHECK(rep_c.m_minus == 0);
    CHECK(rep_c.residual > 1e-2);

    auto sphere = ManifoldModel::sphere(2);
    auto equator = Submanifold::equator(sphere);
    CHECK_THROWS_AS(classify_splitting(equator, equator.conormal_point(0.1, 1.0)), NotAnosov);
    // The geodesic through i is vertical, so its tangent direction points up.
    auto tangent = geometry::hyperbolic_phase_point(bolza, {0.0, 1.0}, kPi / 2);
    CHECK_THROWS_AS(classify_splitting(geo, tangent), NotConormal);
}

TEST_CASE("splitting membership flags stay internally consistent") {
    auto bolza = ManifoldModel::bolza();
    std::vector<Submanifold> kinds;
    kinds.push_back(Submanifold::horocycle(bolza, 1.0));
    kinds.push_back(Submanifold::hyperbolic_geodesic(bolza, 1.0));
    kinds.push_back(Submanifold::geodesic_circle(bolza, 0.6));
    StreamRng rng(3, 0);
    for (const auto& H : kinds) {
        for (int i = 0; i < 40; ++i) {
            double u = rng.uniform(0.05, 0.95);
            double fiber = rng.coin() ? 1.0 : -1.0;
            auto rep = classify_splitting(H, H.conormal_point(u, fiber));
            CHECK(rep.in_A == (rep.in_mixed && rep.in_split));
            CHECK(rep.in_N == (rep.in_mixed || rep.in_split));
        }
    }
}

TEST_CASE("conormal tangent frames are orthogonal to the flow direction") {
    auto sphere = ManifoldModel::sphere(2);
    auto torus = ManifoldModel::torus(2);
    std::vector<Submanifold> kinds;
    kinds.push_back(Submanifold::equator(sphere));
    kinds.push_back(Submanifold::latitude_circle(sphere, 0.8));
    kinds.push_back(Submanifold::torus_circle(torus, Vec{0.5, 0.5}, 0.3));
    kinds.push_back(Submanifold::parametric_curve(
        torus,
        [](double u) {
            return Vec{0.5 + 0.2 * std::cos(2 * kPi * u), 0.5 + 0.3 * std::sin(2 * kPi * u)};
        },
        true));
    for (const auto& H : kinds) {
        auto set = sample_snh(H, 125, 23);
        for (const auto& s : set.samples) {
            Vec tangent = H.unit_tangent(s.u);
            CHECK(std::abs(dot(tangent, s.point.xi)) < 1e-8);
        }
    }
}

TEST_CASE("volume growth reproduces the exact Jacobi determinants") {
    auto torus = ManifoldModel::torus(2);
    auto line = Submanifold::torus_geodesic(torus, 0, 1, Vec{0.0, 0.0});
    auto set_line = sample_snh(line, 16, 2);
    for (double t : {0.5, 2.0, 7.3})
        CHECK(volume_growth(line, set_line, t) == doctest::Approx(1.0).epsilon(1e-12));

    auto sphere = ManifoldModel::sphere(2);
    auto pole = Submanifold::point(sphere, Vec{0, 0, 1});
    auto fiber = sample_snh(pole, 16, 2);
    CHECK(volume_growth(pole, fiber, kPi / 2) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(volume_growth(pole, fiber, kPi) < 1e-9);

    auto bolza = ManifoldModel::bolza();
    auto horo = Submanifold::horocycle(bolza, 1.0);
    auto stable_arc = sample_snh_side(horo, 16, 2, +1.0);
    CHECK(volume_growth(horo, stable_arc, 2.0) ==
          doctest::Approx(std::exp(-2.0)).epsilon(1e-6));
}

TEST_CASE("volume-growth integrals certify exponential decay only") {
    auto bolza = ManifoldModel::bolza();
    auto horo = Submanifold::horocycle(bolza, 1.0);
    auto stable_arc = sample_snh_side(horo, 16, 2, +1.0);
    auto rep = integrability_report(horo, stable_arc, 20.0, 0.05);
    double expected = stable_arc.total_mass * (1.0 - std::exp(-20.0));
    CHECK(std::abs(rep.volume_integral_forward - expected) < 0.01 * expected);
    CHECK(rep.certified_forward);
    CHECK_FALSE(rep.certified_backward);
    CHECK(rep.verdict == "recurrent-measure-zero certified (forward)");

    auto torus = ManifoldModel::torus(2);
    auto line = Submanifold::torus_geodesic(torus, 0, 1, Vec{0.0, 0.0});
    auto flat = sample_snh(line, 16, 2);
    auto rep_flat = integrability_report(line, flat, 20.0, 0.05);
    CHECK(rep_flat.integral_forward == doctest::Approx(20.0).epsilon(1e-9));
    CHECK(rep_flat.verdict == "not certified");

    auto sphere = ManifoldModel::sphere(2);
    auto pole = Submanifold::point(sphere, Vec{0, 0, 1});
    auto fiber = sample_snh(pole, 16, 2);
    auto rep_pt = integrability_report(pole, fiber, 2 * kPi, 0.01);
    CHECK(std::abs(rep_pt.integral_forward - 4.0) < 0.04);
    CHECK_FALSE(rep_pt.certified_forward);
    CHECK(rep_pt.verdict == "not certified");
}

TEST_CASE("flowed submanifolds land where the geometry says") {
    auto sphere = ManifoldModel::sphere(2);
    auto pole = Submanifold::point(sphere, Vec{0, 0, 1});
    for (const auto& x : flow_submanifold(pole, kPi / 2, 64)) CHECK(std::abs(x[2]) < 1e-9);

    auto torus = ManifoldModel::torus(2);
    auto line = Submanifold::torus_geodesic(torus, 0, 1, Vec{0.0, 0.0});
    for (const auto& x : flow_submanifold(line, 0.25, 64)) {
        bool near_quarter = std::abs(x[0] - 0.25) < 1e-9 || std::abs(x[0] - 0.75) < 1e-9;
        CHECK(near_quarter);
    }
    auto circle = Submanifold::torus_circle(torus, Vec{0.5, 0.5}, 0.25);
    for (const auto& x : flow_submanifold(circle, 0.0, 64))
        CHECK(conormal::r_H(circle, x) < 1e-9);
}

TEST_CASE("Liouville orbits on the torus come back near their start") {
    auto torus = ManifoldModel::torus(2);
    auto start = conormal::sample_liouville(torus, 100, 5);
    double frac = self_recurrence_fraction(torus, start, 100.0, 0.1);
    CHECK(frac >= 0.9);
}
