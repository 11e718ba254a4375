#include "vandisc/sde.hpp"

#include "vandisc/parallel.hpp"
#include "vandisc/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace vandisc::sde {

Policy constant_policy(std::size_t control_index)
{
    return [control_index](double, const Vec&) { return control_index; };
}

std::vector<double> uniform_grid(double horizon, double dt)
{
    if (!(horizon >= 0.0) || !(dt > 0.0))
        throw std::invalid_argument("time grid needs horizon >= 0 and dt > 0");
    if (horizon == 0.0)
        return {0.0};
    const double ratio = horizon / dt;
    auto steps = static_cast<std::size_t>(std::ceil(ratio * (1.0 - 1e-12)));
    steps = std::max<std::size_t>(steps, 1);
    if (steps > 100'000'000)
        throw std::invalid_argument("time grid too fine");
    std::vector<double> grid(steps + 1);
    for (std::size_t k = 0; k <= steps; ++k)
        grid[k] = horizon * static_cast<double>(k) / static_cast<double>(steps);
    grid.back() = horizon;
    return grid;
}

void validate_grid(const std::vector<double>& grid)
{
    if (grid.empty() || grid.front() != 0.0)
        throw std::invalid_argument("time grid must start at 0");
    for (std::size_t k = 1; k < grid.size(); ++k)
        if (!(grid[k] > grid[k - 1]))
            throw std::invalid_argument("time grid must be strictly increasing");
}

Vec brownian_increment(std::uint64_t seed, std::uint64_t path, std::uint64_t step, int noise_dim, double dt)
{
    Vec dw(noise_dim);
    rng::normals(seed, rng::Stream::brownian, path, step, {dw.data(), static_cast<std::size_t>(noise_dim)});
    return dw * std::sqrt(dt);
}

Vec euler_step(const ControlProblem& problem, const Vec& x, std::size_t u, double dt, const Vec& dw)
{
    return x + problem.drift(x, u) * dt + problem.diffusion(x, u) * dw;
}

namespace {

template <class Choose>
StatePath simulate_impl(const ControlProblem& problem, const Vec& x0, Choose&& choose,
                        const std::vector<double>& time_grid, std::uint64_t seed, std::uint64_t path_index,
                        bool project)
{
    validate_grid(time_grid);
    if (x0.size() != problem.state_dim())
        throw std::invalid_argument("initial state has the wrong dimension");
    StatePath path;
    path.time_grid = time_grid;
    path.seed = seed;
    path.path_index = path_index;
    path.states.reserve(time_grid.size());
    path.control_trace.reserve(time_grid.size() - 1);
    path.states.push_back(x0);
    Vec x = x0;
    for (std::size_t k = 0; k + 1 < time_grid.size(); ++k) {
        const double dt = time_grid[k + 1] - time_grid[k];
        const std::size_t u = choose(k, time_grid[k], x);
        if (u >= problem.control_count())
            throw std::out_of_range("policy returned an invalid control index");
        const Vec dw = brownian_increment(seed, path_index, k, problem.noise_dim(), dt);
        x = euler_step(problem, x, u, dt, dw);
        if (project)
            x = problem.domain().project(x);
        path.states.push_back(x);
        path.control_trace.push_back(u);
    }
    return path;
}

}  // namespace

StatePath simulate(const ControlProblem& problem, const Vec& x0, const Policy& policy,
                   const std::vector<double>& time_grid, std::uint64_t seed, std::uint64_t path_index, bool project)
{
    if (!problem.domain().contains(x0, 1e-12))
        throw std::invalid_argument("initial state lies outside the domain");
    return simulate_impl(
        problem, x0, [&](std::size_t, double t, const Vec& x) { return policy(t, x); }, time_grid, seed, path_index,
        project);
}

namespace {

std::vector<Vec> invariance_starts(const model::Domain& domain)
{
    const int n = domain.dim();
    std::vector<Vec> starts;
    const Vec c = domain.center();
    starts.push_back(c);
    if (domain.shape() == model::Domain::Shape::box) {
        for (int i = 0; i < n; ++i) {
            Vec lo = c, hi = c;
            lo[i] = domain.lower()[i];
            hi[i] = domain.upper()[i];
            starts.push_back(lo);
            starts.push_back(hi);
        }
        for (int mask = 0; mask < (1 << n); ++mask) {
            Vec corner(n);
            for (int i = 0; i < n; ++i)
                corner[i] = (mask >> i) & 1 ? domain.upper()[i] : domain.lower()[i];
            starts.push_back(corner);
        }
    } else {
        for (int i = 0; i < n; ++i) {
            Vec lo = c, hi = c;
            lo[i] -= domain.radius();
            hi[i] += domain.radius();
            starts.push_back(lo);
            starts.push_back(hi);
        }
    }
    for (std::uint64_t j = 1; j <= 4; ++j)
        starts.push_back(model::quasi_random_point(domain, j, 0));
    return starts;
}

}  // namespace

InvarianceReport invariance_check(const ControlProblem& problem, std::size_t path_count, double horizon, double dt,
                                  std::uint64_t seed)
{
    if (path_count < 1)
        throw std::invalid_argument("invariance_check needs path_count >= 1");
    const std::vector<double> grid = uniform_grid(horizon, dt);
    const std::vector<Vec> starts = invariance_starts(problem.domain());
    const std::size_t policies = problem.control_count() + 1;  // constants, then random switching
    const std::size_t total = starts.size() * policies * path_count;

    std::vector<double> worst(total, 0.0);
    std::vector<Vec> worst_state(total);
    parallel::ErrorSlot errors;
#pragma omp parallel for schedule(dynamic, 16)
    for (std::size_t job = 0; job < total; ++job) errors.run([&] {
        const std::size_t start = job / (policies * path_count);
        const std::size_t policy = (job / path_count) % policies;
        const std::size_t count = problem.control_count();
        auto choose = [&](std::size_t k, double, const Vec&) -> std::size_t {
            if (policy < count)
                return policy;
            const double draw = rng::uniform(seed, rng::Stream::switching, job, k);
            return std::min(count - 1, static_cast<std::size_t>(draw * static_cast<double>(count)));
        };
        const StatePath path = simulate_impl(problem, starts[start], choose, grid, seed, job, false);
        for (const Vec& x : path.states) {
            const double excursion = problem.domain().distance(x);
            if (excursion > worst[job]) {
                worst[job] = excursion;
                worst_state[job] = x;
            }
        }
    });
    errors.rethrow();

    InvarianceReport report;
    report.sample_count = total * grid.size();
    for (std::size_t job = 0; job < total; ++job)
        if (worst[job] > report.max_excursion) {
            report.max_excursion = worst[job];
            report.violating_seed = seed;
            report.violating_path = job;
            report.violating_state = worst_state[job];
        }
    return report;
}

void write_path_csv(const StatePath& path, std::ostream& out)
{
    const Eigen::Index n = path.states.empty() ? 0 : path.states.front().size();
    out << "t";
    for (Eigen::Index i = 0; i < n; ++i)
        out << ",x" << (i + 1);
    out << ",u_index\n";
    char buffer[40];
    for (std::size_t k = 0; k < path.states.size(); ++k) {
        std::snprintf(buffer, sizeof buffer, "%.17g", path.time_grid[k]);
        out << buffer;
        for (Eigen::Index i = 0; i < n; ++i) {
            std::snprintf(buffer, sizeof buffer, "%.17g", path.states[k][i]);
            out << ',' << buffer;
        }
        const std::size_t u = path.control_trace.empty()
                                  ? 0
                                  : path.control_trace[std::min(k, path.control_trace.size() - 1)];
        out << ',' << u << '\n';
    }
}

void CloudSegment::resize(std::size_t paths, int n, int d, std::size_t first, std::size_t count)
{
    path_count = paths;
    state_dim = n;
    noise_dim = d;
    first_step = first;
    steps = count;
    states.resize((count + 1) * paths * static_cast<std::size_t>(n));
    brownian.resize((count + 1) * paths * static_cast<std::size_t>(d));
    increments.resize(count * paths * static_cast<std::size_t>(d));
    controls.resize(count * paths);
}

namespace kernels {
namespace {

void advance_path(const ControlProblem& problem, const Policy& policy, const std::vector<double>& grid,
                  std::uint64_t seed, CloudSegment& segment, std::size_t p)
{
    const int n = segment.state_dim;
    const int d = segment.noise_dim;
    Vec x = Eigen::Map<const Vec>(segment.state(0, p), n);
    Vec w = Eigen::Map<const Vec>(segment.w(0, p), d);
    for (std::size_t j = 0; j < segment.steps; ++j) {
        const std::size_t k = segment.first_step + j;
        const double dt = grid[k + 1] - grid[k];
        const std::size_t u = policy(grid[k], x);
        if (u >= problem.control_count())
            throw std::out_of_range("policy returned an invalid control index");
        const Vec dw = brownian_increment(seed, p, k, d, dt);
        x = problem.domain().project(euler_step(problem, x, u, dt, dw));
        w += dw;
        std::copy(x.data(), x.data() + n, segment.state(j + 1, p));
        std::copy(w.data(), w.data() + d, segment.w(j + 1, p));
        std::copy(dw.data(), dw.data() + d,
                  segment.increments.data() + (j * segment.path_count + p) * static_cast<std::size_t>(d));
        segment.controls[j * segment.path_count + p] = static_cast<std::uint8_t>(u);
    }
}

}  // namespace

void advance_cloud_serial(const ControlProblem& problem, const Policy& policy, const std::vector<double>& grid,
                          std::uint64_t seed, CloudSegment& segment)
{
    for (std::size_t p = 0; p < segment.path_count; ++p)
        advance_path(problem, policy, grid, seed, segment, p);
}

void advance_cloud_parallel(const ControlProblem& problem, const Policy& policy, const std::vector<double>& grid,
                            std::uint64_t seed, CloudSegment& segment)
{
    const auto paths = static_cast<std::ptrdiff_t>(segment.path_count);
    parallel::ErrorSlot errors;
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t p = 0; p < paths; ++p)
        errors.run([&] { advance_path(problem, policy, grid, seed, segment, static_cast<std::size_t>(p)); });
    errors.rethrow();
}

}  // namespace kernels

}  // namespace vandisc::sde
