#include <benchmark/benchmark.h>

#include <cmath>

#include "conormal_lab/conormal.hpp"
#include "conormal_lab/fractal.hpp"
#include "conormal_lab/spectral.hpp"

using namespace clab;

static void BM_FlowTorus(benchmark::State& state) {
    auto model = geometry::ManifoldModel::torus(2);
    auto rho = geometry::make_phase_point(model, Vec{0.3, 0.4}, Vec{0.6, 0.8});
    double t = 0.0;
    for (auto _ : state) {
        t += 0.01;
        benchmark::DoNotOptimize(geometry::flow(model, rho, t));
    }
}
BENCHMARK(BM_FlowTorus);

static void BM_FlowBolzaWithReduction(benchmark::State& state) {
    auto model = geometry::ManifoldModel::bolza();
    auto rho = geometry::hyperbolic_phase_point(model, {0.1, 1.0}, 0.7);
    for (auto _ : state) {
        rho = geometry::flow(model, rho, 0.05);
        benchmark::DoNotOptimize(rho);
    }
}
BENCHMARK(BM_FlowBolzaWithReduction);

static void BM_QuotientDistance(benchmark::State& state) {
    auto model = geometry::ManifoldModel::bolza();
    std::complex<double> z(0.3, 0.8), w(-0.2, 1.4);
    for (auto _ : state)
        benchmark::DoNotOptimize(geometry::hyperbolic_quotient_distance(model, z, w));
}
BENCHMARK(BM_QuotientDistance);

static void BM_SnhDistanceCircle(benchmark::State& state) {
    auto model = geometry::ManifoldModel::bolza();
    auto H = conormal::Submanifold::geodesic_circle(model, 0.5);
    auto rho = geometry::hyperbolic_phase_point(model, {0.2, 1.1}, 1.1);
    for (auto _ : state) benchmark::DoNotOptimize(conormal::snh_distance(H, rho));
}
BENCHMARK(BM_SnhDistanceCircle);

static void BM_ZonalAverage(benchmark::State& state) {
    auto model = geometry::ManifoldModel::sphere(2);
    auto H = conormal::Submanifold::equator(model);
    auto mode = spectral::EigenMode::zonal(model, static_cast<int>(state.range(0)));
    for (auto _ : state)
        benchmark::DoNotOptimize(spectral::average(H, spectral::full_domain(),
                                                   spectral::unit_weight, mode));
}
BENCHMARK(BM_ZonalAverage)->Arg(8)->Arg(64);

static void BM_BoxCounting(benchmark::State& state) {
    auto cantor = fractal::cantor_middle_thirds(13);
    for (auto _ : state) benchmark::DoNotOptimize(fractal::box_dimension(cantor, 2, 10));
}
BENCHMARK(BM_BoxCounting);

BENCHMARK_MAIN();
