#include "vandisc/bsde.hpp"

#include "vandisc/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace vandisc::bsde {
namespace {

// Runs body(i) for i in [0, count), in parallel when requested.
template <class F>
void for_paths(std::size_t count, bool parallel, F&& body)
{
    if (parallel) {
        parallel::ErrorSlot errors;
        const auto n = static_cast<std::ptrdiff_t>(count);
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < n; ++i)
            errors.run([&] { body(static_cast<std::size_t>(i)); });
        errors.rethrow();
    } else {
        for (std::size_t i = 0; i < count; ++i)
            body(i);
    }
}

// Plain left-to-right mean; a constant sample returns that constant exactly.
double sequential_mean(const std::vector<double>& values)
{
    if (std::all_of(values.begin(), values.end(), [&](double v) { return v == values.front(); }))
        return values.front();
    double sum = 0.0;
    for (double v : values)
        sum += v;
    return sum / static_cast<double>(values.size());
}

std::string format_number(double value)
{
    char buffer[40];
    std::snprintf(buffer, sizeof buffer, "%.17g", value);
    return buffer;
}

}  // namespace

Vec BackwardResult::z_at(std::size_t step, const Vec& x, const Vec& w) const
{
    if (step >= z_models.size())
        throw std::out_of_range("no Z model kept for this step");
    const Regression::Model& model = z_models[step];
    double regressor[2 * kMaxDim];
    const auto n = static_cast<std::size_t>(x.size());
    std::copy(x.data(), x.data() + n, regressor);
    if (regress_on_brownian)
        std::copy(w.data(), w.data() + w.size(), regressor + n);
    Vec z(static_cast<Eigen::Index>(model.fits.size()));
    for (std::size_t j = 0; j < model.fits.size(); ++j)
        z[static_cast<Eigen::Index>(j)] = model.evaluate(j, regressor);
    return z;
}

BackwardResult solve_backward(const ControlProblem& problem, const Vec& x0, const sde::Policy& policy, double lambda,
                              double horizon, const DriverFn& driver, const TerminalFn& terminal,
                              const SchemeConfig& config)
{
    if (!(horizon > 0.0))
        throw std::invalid_argument("BSDE horizon must be positive");
    if (!(lambda >= 0.0))
        throw std::invalid_argument("discount lambda must be non-negative");
    if (config.path_count < 1)
        throw std::invalid_argument("BSDE needs at least one path");
    if (!problem.domain().contains(x0, 1e-12))
        throw std::invalid_argument("initial state lies outside the domain");

    const int n_dim = problem.state_dim();
    const int d_dim = problem.noise_dim();
    const std::size_t paths = config.path_count;
    const std::vector<double> grid = sde::uniform_grid(horizon, config.dt);
    const std::size_t steps = grid.size() - 1;
    const bool parallel = config.parallel;
    const int cols = n_dim + (config.regress_on_brownian ? d_dim : 0);

    // Forward pass keeps only segment boundaries; segments are replayed
    // backward from the counter-based generator.
    const std::size_t seg_len = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(std::sqrt(double(steps)))));
    const std::size_t seg_count = (steps + seg_len - 1) / seg_len;
    struct Checkpoint {
        std::vector<double> x, w;
    };
    std::vector<Checkpoint> checkpoints(seg_count);
    sde::CloudSegment segment;

    auto advance = [&](sde::CloudSegment& seg) {
        if (parallel)
            sde::kernels::advance_cloud_parallel(problem, policy, grid, config.seed, seg);
        else
            sde::kernels::advance_cloud_serial(problem, policy, grid, config.seed, seg);
    };
    auto load_segment = [&](std::size_t s) {
        const std::size_t first = s * seg_len;
        segment.resize(paths, n_dim, d_dim, first, std::min(seg_len, steps - first));
        std::copy(checkpoints[s].x.begin(), checkpoints[s].x.end(), segment.states.begin());
        std::copy(checkpoints[s].w.begin(), checkpoints[s].w.end(), segment.brownian.begin());
        advance(segment);
    };

    checkpoints[0].x.resize(paths * static_cast<std::size_t>(n_dim));
    checkpoints[0].w.assign(paths * static_cast<std::size_t>(d_dim), 0.0);
    for (std::size_t p = 0; p < paths; ++p)
        std::copy(x0.data(), x0.data() + n_dim, checkpoints[0].x.begin() + static_cast<std::ptrdiff_t>(p * n_dim));
    for (std::size_t s = 0; s < seg_count; ++s) {
        load_segment(s);
        if (s + 1 < seg_count) {
            const double* xs = segment.state(segment.steps, 0);
            const double* ws = segment.w(segment.steps, 0);
            checkpoints[s + 1].x.assign(xs, xs + paths * static_cast<std::size_t>(n_dim));
            checkpoints[s + 1].w.assign(ws, ws + paths * static_cast<std::size_t>(d_dim));
        }
    }

    BackwardResult result;
    result.time_grid = grid;
    result.y_values.assign(steps + 1, 0.0);
    result.z_values.assign(steps, Vec::Zero(d_dim));
    result.states.assign(steps + 1, Vec::Zero(n_dim));
    result.min_degree = config.degree;
    result.regress_on_brownian = config.regress_on_brownian;
    if (config.keep_z_models)
        result.z_models.resize(steps);

    auto state_of = [&](std::size_t local, std::size_t p) {
        return Vec(Eigen::Map<const Vec>(segment.state(local, p), n_dim));
    };
    auto w_of = [&](std::size_t local, std::size_t p) {
        return Vec(Eigen::Map<const Vec>(segment.w(local, p), d_dim));
    };

    // Terminal values on the last segment, which is still loaded.
    std::vector<double> s_path(paths);    // pathwise multi-step estimator
    std::vector<double> y_next(paths);    // regressed Y at the next step
    for_paths(paths, parallel, [&](std::size_t p) {
        s_path[p] = terminal(state_of(segment.steps, p), w_of(segment.steps, p));
    });
    y_next = s_path;
    result.y_values[steps] = s_path[0];
    result.states[steps] = state_of(segment.steps, 0);

    std::vector<double> regressors(paths * static_cast<std::size_t>(cols));
    std::vector<double> z_target(paths);
    std::vector<double> z_all(paths * static_cast<std::size_t>(d_dim));
    std::vector<double> z_norm2(paths);
    double energy = 0.0;

    for (std::size_t s = seg_count; s-- > 0;) {
        if (s + 1 != seg_count)
            load_segment(s);
        for (std::size_t local = segment.steps; local-- > 0;) {
            const std::size_t k = segment.first_step + local;
            const double dt = grid[k + 1] - grid[k];
            const double t = grid[k];

            for_paths(paths, parallel, [&](std::size_t p) {
                double* row = regressors.data() + p * static_cast<std::size_t>(cols);
                std::copy(segment.state(local, p), segment.state(local, p) + n_dim, row);
                if (config.regress_on_brownian)
                    std::copy(segment.w(local, p), segment.w(local, p) + d_dim, row + n_dim);
            });
            const Regression reg(regressors.data(), paths, cols, config.degree, parallel);
            if (reg.varying_columns() > 0 && reg.degree() < reg.requested_degree()) {
                ++result.degree_reductions;
                result.min_degree = std::min(result.min_degree, reg.degree());
            }

            const Regression::Fit cond_next = reg.fit(y_next.data(), 1);
            std::vector<Regression::Fit> z_fits;
            for (int j = 0; j < d_dim; ++j) {
                for_paths(paths, parallel, [&](std::size_t p) {
                    z_target[p] = (y_next[p] - reg.predict(cond_next, p)) * segment.dw(local, p)[j] / dt;
                });
                z_fits.push_back(reg.fit(z_target.data(), 1));
                for_paths(paths, parallel, [&](std::size_t p) {
                    z_all[p * static_cast<std::size_t>(d_dim) + static_cast<std::size_t>(j)] =
                        reg.predict(z_fits.back(), p);
                });
            }

            const double rho = 1.0 + lambda * dt;
            for_paths(paths, parallel, [&](std::size_t p) {
                const Vec z = Eigen::Map<const Vec>(z_all.data() + p * static_cast<std::size_t>(d_dim), d_dim);
                z_norm2[p] = z.squaredNorm();
                s_path[p] = (s_path[p] + dt * driver(state_of(local, p), z, segment.control(local, p))) / rho;
            });
            energy += std::exp(-2.0 * lambda * t) * sequential_mean(z_norm2) * dt;

            const Regression::Fit cond_y = reg.fit(s_path.data(), 1);
            for_paths(paths, parallel, [&](std::size_t p) { y_next[p] = reg.predict(cond_y, p); });

            result.y_values[k] = y_next[0];
            result.z_values[k] = Eigen::Map<const Vec>(z_all.data(), d_dim);
            result.states[k] = state_of(local, 0);
            if (config.keep_z_models)
                result.z_models[k] = reg.model(std::move(z_fits));
        }
    }

    result.y0 = sequential_mean(s_path);
    result.y_values[0] = result.y0;
    result.z0 = result.z_values.front();
    double var = 0.0;
    for (double v : s_path)
        var += (v - result.y0) * (v - result.y0);
    result.std_error = paths > 1 ? std::sqrt(var / static_cast<double>(paths - 1) / static_cast<double>(paths)) : 0.0;
    result.z_energy = energy;
    result.y0_samples = std::move(s_path);
    return result;
}

BsdePath solve_finite_horizon(const ControlProblem& problem, const Vec& x0, const sde::Policy& policy, double lambda,
                              double horizon, const SchemeConfig& config)
{
    const BackwardResult r = solve_backward(
        problem, x0, policy, lambda, horizon,
        [&problem](const Vec& x, const Vec& z, std::size_t u) { return problem.cost(x, z, u); },
        [](const Vec&, const Vec&) { return 0.0; }, config);
    BsdePath path;
    path.time_grid = r.time_grid;
    path.y_values = r.y_values;
    path.z_values = r.z_values;
    path.lambda = lambda;
    path.truncation_horizon = horizon;
    path.tail_error_bound = 0.0;
    path.std_error = r.std_error;
    path.z_energy = r.z_energy;
    path.degree_reductions = r.degree_reductions;
    return path;
}

double truncation_horizon(double bound_M, double lambda, double tol, double output_horizon)
{
    if (!(lambda > 0.0))
        throw std::invalid_argument("lambda must be positive");
    if (!(tol > 0.0))
        throw std::invalid_argument("tol must be positive");
    if (!(output_horizon >= 0.0))
        throw std::invalid_argument("output horizon must be non-negative");
    double m = output_horizon;
    if (bound_M > 0.0)
        m = std::max(output_horizon, output_horizon + std::log(bound_M / (lambda * tol)) / lambda);
    if (lambda * m > 700.0)
        throw std::invalid_argument("tol too small for the floating-point range of exp(lambda m)");
    return m;
}

BsdePath solve_infinite_horizon(const ControlProblem& problem, const Vec& x0, const sde::Policy& policy,
                                double lambda, double tol, double output_horizon, const SchemeConfig& config)
{
    const double bound_M = problem.constants().bound_M;
    const double m = truncation_horizon(bound_M, lambda, tol, output_horizon);
    // Step chosen so that T is a grid point; m is rounded up to the grid.
    double dt = config.dt;
    if (output_horizon > 0.0)
        dt = output_horizon / std::ceil(output_horizon / config.dt * (1.0 - 1e-12));
    const double steps = std::max(1.0, std::ceil(m / dt * (1.0 - 1e-12)));
    const double m_grid = std::max(steps * dt, m);

    SchemeConfig cfg = config;
    cfg.dt = m_grid / steps;
    BsdePath full = solve_finite_horizon(problem, x0, policy, lambda, m_grid, cfg);

    BsdePath path;
    path.lambda = lambda;
    path.truncation_horizon = m_grid;
    path.std_error = full.std_error;
    path.z_energy = full.z_energy;
    path.degree_reductions = full.degree_reductions;
    for (std::size_t k = 0; k < full.time_grid.size(); ++k) {
        if (full.time_grid[k] > output_horizon * (1.0 + 1e-12) + 1e-12)
            break;
        path.time_grid.push_back(full.time_grid[k]);
        path.y_values.push_back(full.y_values[k]);
        if (k < full.z_values.size())
            path.z_values.push_back(full.z_values[k]);
    }
    const double t_max = path.time_grid.back();
    path.tail_error_bound = bound_M > 0.0 ? bound_M / lambda * std::exp(-lambda * (m_grid - t_max)) : 0.0;
    return path;
}

ConditionReport y_bound_check(const BsdePath& path, const ControlProblem& problem, double numerical_slack)
{
    if (!(path.lambda > 0.0))
        throw std::invalid_argument("y_bound_check needs lambda > 0");
    ConditionReport report("y_bound_check:" + problem.name());
    const double lambda = path.lambda;
    const double bound_M = problem.constants().bound_M;
    const double kz = problem.constants().lip_Kz;

    double worst = 0.0;
    std::size_t at = 0;
    for (std::size_t k = 0; k < path.y_values.size(); ++k)
        if (std::abs(path.y_values[k]) > worst || std::isnan(path.y_values[k])) {
            worst = std::abs(path.y_values[k]);
            at = k;
        }
    report.require("abs_y", worst, bound_M / lambda + path.tail_error_bound,
                   "t=" + format_number(path.time_grid.empty() ? 0.0 : path.time_grid[at]));
    const double energy_bound = 2.0 * (bound_M / lambda) * (bound_M / lambda) * (2.0 + kz * kz / lambda);
    report.require("z_energy", path.z_energy, energy_bound * (1.0 + numerical_slack));
    return report;
}

GExpectationResult g_expectation(const std::function<double(const Vec& z)>& g, const TerminalFn& terminal,
                                 const ControlProblem& problem, const Vec& x0, const sde::Policy& policy,
                                 double horizon, const SchemeConfig& config)
{
    GExpectationResult out;
    out.horizon = horizon;
    out.dt = config.dt;
    out.path_count = config.path_count;
    out.degree = config.degree;
    out.scheme = "backward Euler, polynomial regression";
    if (horizon == 0.0) {
        // Empty interval: the terminal value itself, pathwise equal to eta(x0, 0).
        out.value = terminal(x0, Vec::Zero(problem.noise_dim()));
        out.z0 = Vec::Zero(problem.noise_dim());
        out.samples.assign(1, out.value);
        return out;
    }
    const BackwardResult r = solve_backward(
        problem, x0, policy, 0.0, horizon, [&g](const Vec&, const Vec& z, std::size_t) { return g(z); }, terminal,
        config);
    out.value = r.y0;
    out.std_error = r.std_error;
    out.z0 = r.z0;
    out.samples = r.y0_samples;
    out.degree = r.min_degree;
    return out;
}

}  // namespace vandisc::bsde
