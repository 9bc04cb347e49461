#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>

#include "conormal_lab/rng.hpp"
#include "conormal_lab/semiclassical.hpp"

using namespace clab;
using namespace clab::semiclassical;
using conormal::Submanifold;
using geometry::ManifoldModel;
using spectral::EigenMode;

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

Symbol xi_only(std::function<double(const Vec&)> g) {
    Symbol a;
    a.support_radius = 1.5;
    a.sup_bound = 1.0;
    a.eval = [g = std::move(g)](const Vec&, const Vec& xi) -> std::complex<double> {
        double b = radial_bump(xi.norm(), 1.0, 0.5);
        if (b == 0.0) return 0.0;
        return b * g(xi.normalized());
    };
    return a;
}

std::vector<EigenMode> wave_family(const ManifoldModel& torus, std::initializer_list<int> ms) {
    std::vector<EigenMode> fam;
    for (int m : ms) fam.push_back(EigenMode::plane_wave(torus, {m, 0}));
    return fam;
}

double grid_norm(const Grid& u, int G) {
    double acc = 0;
    for (const auto& z : u) acc += std::norm(z);
    return std::sqrt(acc / (double(G) * G));
}

}  // namespace

TEST_CASE("quantization acts as an exact Fourier multiplier on exponentials") {
    auto torus = ManifoldModel::torus(2);
    const int G = 64;
    auto mode = EigenMode::plane_wave(torus, {5, 0});
    Grid u = mode_grid(mode, G);

    auto a = xi_only([](const Vec& xi) { return 0.5 + 0.25 * xi[0]; });
    Grid v = quantize_apply(a, mode.h(), u, G);
    std::complex<double> expected = 0.75;  // g evaluated at (1, 0)
    for (std::size_t i = 0; i < u.size(); ++i)
        CHECK(std::abs(v[i] - expected * u[i]) < 1e-12);

    Symbol one;
    one.support_radius = 10.0;
    one.eval = [](const Vec&, const Vec&) -> std::complex<double> { return 1.0; };
    Grid w = quantize_apply(one, mode.h(), u, G);
    for (std::size_t i = 0; i < u.size(); ++i) CHECK(std::abs(w[i] - u[i]) < 1e-12);
}

TEST_CASE("x-dependent symbols multiply after the frequency cutoff") {
    auto torus = ManifoldModel::torus(2);
    const int G = 64;
    auto mode = EigenMode::plane_wave(torus, {5, 0});
    Grid u = mode_grid(mode, G);
    Symbol a;
    a.support_radius = 1.5;
    a.eval = [](const Vec& x, const Vec& xi) -> std::complex<double> {
        return std::cos(2 * kPi * x[0]) * radial_bump(xi.norm(), 1.0, 0.5);
    };
    Grid v = quantize_apply(a, mode.h(), u, G);
    for (int r = 0; r < G; ++r)
        for (int c = 0; c < G; ++c) {
            std::complex<double> expected =
                std::cos(2 * kPi * r / G) * u[std::size_t(r) * G + c];
            CHECK(std::abs(v[std::size_t(r) * G + c] - expected) < 1e-12);
        }
}

TEST_CASE("quantization is linear and multiplier-bounded") {
    auto torus = ManifoldModel::torus(2);
    const int G = 32;
    StreamRng rng(9, 0);
    // Band-limited random grid function.
    Grid u(std::size_t(G) * G);
    for (auto& z : u) z = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
    auto a = xi_only([](const Vec& xi) { return 0.3 + 0.7 * xi[1]; });
    const double h = 1.0 / (2.0 * kPi * 5.0);

    Grid au = quantize_apply(a, h, u, G);
    CHECK(grid_norm(au, G) <= (1.0 + 1e-6) * grid_norm(u, G));

    Grid u2(std::size_t(G) * G);
    for (auto& z : u2) z = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
    Grid sum(std::size_t(G) * G);
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] = 2.0 * u[i] - 3.0 * u2[i];
    Grid a_sum = quantize_apply(a, h, sum, G);
    Grid au2 = quantize_apply(a, h, u2, G);
    for (std::size_t i = 0; i < sum.size(); ++i)
        CHECK(std::abs(a_sum[i] - (2.0 * au[i] - 3.0 * au2[i])) < 1e-10);
}

TEST_CASE("grids that cannot resolve the oscillation are rejected") {
    auto torus = ManifoldModel::torus(2);
    auto mode = EigenMode::plane_wave(torus, {64, 0});
    Grid u(64 * 64, 1.0);
    auto a = xi_only([](const Vec&) { return 1.0; });
    CHECK_THROWS_AS(quantize_apply(a, mode.h(), u, 64), GridTooCoarse);
    Grid odd(100 * 100, 1.0);
    CHECK_THROWS_AS(quantize_apply(a, mode.h(), odd, 100), GridTooCoarse);
}

TEST_CASE("defect pairings recover the direction of a plane-wave family") {
    auto torus = ManifoldModel::torus(2);
    auto family = wave_family(torus, {8, 16, 32, 64});
    const int G = 256;

    auto g_dir = xi_only([](const Vec& xi) { return 0.5 + 0.5 * xi[0]; });
    auto seq = defect_pairing(g_dir, family, G);
    for (const auto& v : seq.values) CHECK(std::abs(v - std::complex<double>(1.0)) < 1e-10);
    CHECK(std::abs(seq.limit - std::complex<double>(1.0)) < 1e-10);

    Symbol osc;
    osc.support_radius = 1.5;
    osc.eval = [](const Vec& x, const Vec& xi) -> std::complex<double> {
        return std::cos(2 * kPi * x[0]) * radial_bump(xi.norm(), 1.0, 0.5);
    };
    auto seq_osc = defect_pairing(osc, family, G);
    for (const auto& v : seq_osc.values) CHECK(std::abs(v) < 1e-10);

    Symbol weighted;
    weighted.support_radius = 1.5;
    weighted.eval = [](const Vec& x, const Vec& xi) -> std::complex<double> {
        return (2.0 + std::sin(2 * kPi * x[1])) * radial_bump(xi.norm(), 1.0, 0.5);
    };
    auto seq_w = defect_pairing(weighted, family, G);
    // Matches the direct x-integral of the symbol at xi = (1, 0).
    for (const auto& v : seq_w.values) CHECK(std::abs(v - std::complex<double>(2.0)) < 1e-10);
    CHECK(std::abs(seq_w.limit - std::complex<double>(2.0)) < 1e-10);
}

TEST_CASE("pairings of real direction symbols are real") {
    auto torus = ManifoldModel::torus(2);
    auto family = wave_family(torus, {8, 16});
    auto a = xi_only([](const Vec& xi) { return xi[0] * xi[0] - 0.3 * xi[1]; });
    auto seq = defect_pairing(a, family, 128);
    for (const auto& v : seq.values) CHECK(std::abs(v.imag()) < 1e-10);
}

TEST_CASE("the estimated defect measure integrates test symbols consistently") {
    auto torus = ManifoldModel::torus(2);
    auto family = wave_family(torus, {8, 16, 32});
    MuEstimateOptions opts;
    opts.grid = 128;
    opts.n_samples = 4000;
    opts.seed = 13;
    auto mu = estimate_defect_measure(family, opts);
    CHECK(mu.total_mass == doctest::Approx(1.0).epsilon(0.02));

    std::vector<Symbol> tests;
    tests.push_back(xi_only([](const Vec&) { return 1.0; }));
    tests.push_back(xi_only([](const Vec& xi) { return xi[0]; }));
    Symbol weighted;
    weighted.support_radius = 1.5;
    weighted.eval = [](const Vec& x, const Vec& xi) -> std::complex<double> {
        return (2.0 + std::sin(2 * kPi * x[1])) * radial_bump(xi.norm(), 1.0, 0.5);
    };
    tests.push_back(weighted);
    for (const auto& a : tests) {
        auto direct = defect_pairing(a, family, opts.grid);
        std::complex<double> integrated = 0.0;
        for (const auto& s : mu.samples) integrated += s.weight * a.eval(s.point.x, s.point.xi);
        CHECK(std::abs(integrated - direct.values.back()) <=
              0.02 * std::max(1.0, std::abs(direct.values.back())));
    }

    // Bitwise determinism of the estimation pipeline.
    auto mu2 = estimate_defect_measure(family, opts);
    REQUIRE(mu2.samples.size() == mu.samples.size());
    for (std::size_t i = 0; i < mu.samples.size(); ++i) {
        CHECK(mu2.samples[i].point.x[0] == mu.samples[i].point.x[0]);
        CHECK(mu2.samples[i].weight == mu.samples[i].weight);
    }
}

TEST_CASE("the two-sided bound check balances at the plane-wave maximizer") {
    auto torus = ManifoldModel::torus(2);
    auto line = Submanifold::torus_geodesic(torus, 0, 1, Vec{0.0, 0.0});
    auto family = wave_family(torus, {8, 16, 32});
    auto cells = conormal::CellPartition::default_for(line);
    BoundCheckOptions opts;
    opts.mu.grid = 128;
    opts.mu.n_samples = 20000;
    opts.mu.seed = 11;
    opts.eps = 1e-5;
    auto rep = bound_check(line, spectral::full_domain(), spectral::unit_weight, family,
                           cells, opts);
    CHECK_FALSE(rep.singular_only);
    CHECK(rep.mu_H_mass == doctest::Approx(2.0).epsilon(5e-3));
    for (double l : rep.lhs) CHECK(l == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(rep.ratio_max == doctest::Approx(1.0).epsilon(0.01));
    // Density 2 on the wave-side cells, exactly zero on the others.
    for (std::size_t c = 0; c < rep.f_cells.size(); ++c) {
        double u, fiber;
        cells.cell_center(line, static_cast<int>(c), u, fiber);
        if (dot(line.conormal(u, fiber), Vec{1.0, 0.0}) > 0) {
            CHECK(rep.f_cells[c] == doctest::Approx(2.0).epsilon(0.1));
        } else {
            CHECK(rep.f_cells[c] == 0.0);
        }
    }
}

TEST_CASE("tangent families produce a singular-only report with vanishing averages") {
    auto torus = ManifoldModel::torus(2);
    auto line = Submanifold::torus_geodesic(torus, 0, 1, Vec{0.0, 0.0});
    std::vector<EigenMode> tangent;
    for (int m : {8, 16, 32}) tangent.push_back(EigenMode::plane_wave(torus, {0, m}));
    auto cells = conormal::CellPartition::default_for(line);
    BoundCheckOptions opts;
    opts.mu.grid = 128;
    opts.mu.n_samples = 5000;
    opts.mu.seed = 11;
    auto rep = bound_check(line, spectral::full_domain(), spectral::unit_weight, tangent,
                           cells, opts);
    CHECK(rep.singular_only);
    CHECK(rep.rhs == 0.0);
    CHECK(rep.mu_H_mass == 0.0);
    for (double l : rep.lhs) CHECK(l < 1e-10);
    CHECK(rep.lhs_tail < 1e-10);
}

TEST_CASE("a vanishing weight degenerates both sides of the bound") {
    auto torus = ManifoldModel::torus(2);
    auto line = Submanifold::torus_geodesic(torus, 0, 1, Vec{0.0, 0.0});
    auto family = wave_family(torus, {8, 16, 32});
    auto cells = conormal::CellPartition::default_for(line);
    BoundCheckOptions opts;
    opts.mu.grid = 128;
    opts.mu.n_samples = 5000;
    opts.mu.seed = 11;
    opts.eps = 1e-5;
    auto zero_w = [](double) { return 0.0; };
    auto rep = bound_check(line, spectral::full_domain(), zero_w, family, cells, opts);
    CHECK(rep.rhs == 0.0);
    for (double l : rep.lhs) CHECK(l < 1e-12);
    CHECK(rep.ratio_max == 0.0);
}
