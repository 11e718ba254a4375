// Serial reference kernels against their OpenMP counterparts.
#include "vandisc/bsde.hpp"
#include "vandisc/hjb.hpp"
#include "vandisc/regression.hpp"
#include "vandisc/sde.hpp"

#include <benchmark/benchmark.h>

using namespace vandisc;

namespace {

const char* kPlane = R"(name = plane
dimension = 2
noise_dimension = 2
[dynamics]
b1 = -u1*x1
b2 = -u1*x2
sigma11 = 0.3*(1 - x1^2)
sigma22 = 0.3*(1 - x2^2)
[cost]
psi = x1^2 + x2^2
[domain]
type = box
lower = -1, -1
upper = 1, 1
[constants]
M = 2
K_x = 4
K_z = 0
c = 1
c0 = 4
M0 = 4
[controls]
values = 0.5; 1
)";

const model::ControlProblem& plane()
{
    static const auto p = model::parse_problem(kPlane);
    return p;
}

void advance_cloud(benchmark::State& state, bool parallel)
{
    const auto& p = plane();
    const auto grid = sde::uniform_grid(1.0, 0.01);
    const auto paths = static_cast<std::size_t>(state.range(0));
    sde::CloudSegment seg;
    const auto policy = sde::constant_policy(1);
    for (auto _ : state) {
        seg.resize(paths, 2, 2, 0, grid.size() - 1);
        for (std::size_t i = 0; i < paths; ++i) {
            seg.states[2 * i] = 0.5;
            seg.states[2 * i + 1] = -0.3;
        }
        std::fill(seg.brownian.begin(), seg.brownian.begin() + static_cast<std::ptrdiff_t>(2 * paths), 0.0);
        if (parallel)
            sde::kernels::advance_cloud_parallel(p, policy, grid, 1, seg);
        else
            sde::kernels::advance_cloud_serial(p, policy, grid, 1, seg);
        benchmark::DoNotOptimize(seg.states.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(paths * (grid.size() - 1)));
}

void bellman_sweep(benchmark::State& state, bool parallel)
{
    const auto& p = plane();
    const auto n = static_cast<int>(state.range(0));
    const auto grid = hjb::Grid::over(p.domain(), n);
    const std::vector<double> zero(grid.size() * 2, 0.0);
    const auto stencils = hjb::build_stencils(p, grid, zero);
    std::vector<double> v(grid.size(), 0.0), out(grid.size());
    std::vector<int> argmin(grid.size());
    for (auto _ : state) {
        if (parallel)
            hjb::kernels::bellman_sweep_parallel(grid, stencils, p.control_count(), v, 0.5, out, argmin);
        else
            hjb::kernels::bellman_sweep_serial(grid, stencils, p.control_count(), v, 0.5, out, argmin);
        v.swap(out);
        benchmark::DoNotOptimize(v.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(grid.size()));
}

void regression_fit(benchmark::State& state, bool parallel)
{
    const auto rows = static_cast<std::size_t>(state.range(0));
    std::vector<double> x(rows * 2), y(rows);
    for (std::size_t i = 0; i < rows; ++i) {
        x[2 * i] = std::sin(0.37 * static_cast<double>(i));
        x[2 * i + 1] = std::cos(0.11 * static_cast<double>(i));
        y[i] = x[2 * i] * x[2 * i + 1];
    }
    for (auto _ : state) {
        const bsde::Regression reg(x.data(), rows, 2, 4, parallel);
        const auto fit = reg.fit(y.data(), 1);
        benchmark::DoNotOptimize(reg.predict(fit, 0));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(rows));
}

void backward_pass(benchmark::State& state, bool parallel)
{
    const auto& p = plane();
    bsde::SchemeConfig cfg;
    cfg.dt = 0.05;
    cfg.path_count = static_cast<std::size_t>(state.range(0));
    cfg.parallel = parallel;
    cfg.degree = 3;
    for (auto _ : state) {
        const auto path = bsde::solve_finite_horizon(p, vec_of({0.5, -0.3}), sde::constant_policy(1), 0.5, 1.0, cfg);
        benchmark::DoNotOptimize(path.y_values.data());
    }
}

}  // namespace

BENCHMARK_CAPTURE(advance_cloud, serial, false)->Arg(2000)->Arg(20000)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(advance_cloud, parallel, true)->Arg(2000)->Arg(20000)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(bellman_sweep, serial, false)->Arg(101)->Arg(401)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(bellman_sweep, parallel, true)->Arg(101)->Arg(401)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(regression_fit, serial, false)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(regression_fit, parallel, true)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(backward_pass, serial, false)->Arg(5000)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(backward_pass, parallel, true)->Arg(5000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
