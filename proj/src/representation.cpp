#include "vandisc/representation.hpp"

#include "vandisc/format.hpp"
#include "vandisc/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace vandisc::representation {
namespace {

bsde::SchemeConfig scheme_for(const MonteCarloConfig& config, bool parallel)
{
    bsde::SchemeConfig s;
    s.dt = config.dt;
    s.path_count = config.path_count;
    s.seed = config.seed;
    s.degree = config.degree;
    s.parallel = parallel;
    return s;
}

std::string format_number(double value)
{
    std::ostringstream out;
    out.precision(6);
    out << value;
    return out.str();
}

// Ordered minimum over cells; ties keep the earliest cell.
std::size_t argmin_cell(const std::vector<Cell>& cells)
{
    std::size_t best = 0;
    for (std::size_t k = 1; k < cells.size(); ++k)
        if (cells[k].value < cells[best].value)
            best = k;
    return best;
}

void validate_t_grid(const std::vector<double>& t_grid)
{
    if (t_grid.empty() || t_grid.front() != 0.0)
        throw std::invalid_argument("t_grid must start at 0");
    for (std::size_t k = 1; k < t_grid.size(); ++k)
        if (!(t_grid[k] > t_grid[k - 1]))
            throw std::invalid_argument("t_grid must be strictly increasing");
}

}  // namespace

std::vector<NamedPolicy> policy_family(const ControlProblem& problem, const hjb::ValueField* field)
{
    std::vector<NamedPolicy> family;
    for (std::size_t u = 0; u < problem.control_count(); ++u)
        family.push_back({"constant " + std::to_string(u), sde::constant_policy(u)});
    if (field)
        family.push_back({"feedback", hjb::feedback_policy(*field)});
    return family;
}

ConditionReport dpp_residual(const ControlProblem& problem, const hjb::ValueField& field, double t,
                             const std::vector<NamedPolicy>& family, const MonteCarloConfig& config,
                             std::size_t node_stride)
{
    if (field.grid.dim() != problem.state_dim())
        throw std::invalid_argument("dpp_residual: field grid does not match the problem");
    if (!(field.lambda > 0.0))
        throw std::invalid_argument("dpp_residual: field needs lambda > 0");
    if (!(t >= 0.0))
        throw std::invalid_argument("dpp_residual: t must be non-negative");
    if (family.empty())
        throw std::invalid_argument("dpp_residual: empty policy family");
    const hjb::Grid& grid = field.grid;
    const double lambda = field.lambda;
    std::vector<std::size_t> nodes;
    for (std::size_t i = 0; i < grid.size(); i += std::max<std::size_t>(node_stride, 1))
        if (grid.active(i))
            nodes.push_back(i);

    std::vector<double> residual(nodes.size(), 0.0), se(nodes.size(), 0.0);
    std::vector<std::size_t> chosen(nodes.size(), 0);
    const bsde::DriverFn driver = [&problem](const Vec& x, const Vec& z, std::size_t u) {
        return problem.cost(x, z, u);
    };
    const bsde::TerminalFn terminal = [&field, lambda](const Vec& x, const Vec&) {
        return field.interpolate(x) / lambda;
    };
    parallel::ErrorSlot errors;
    const auto count = static_cast<std::ptrdiff_t>(nodes.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t k = 0; k < count; ++k) errors.run([&] {
        const auto n = static_cast<std::size_t>(k);
        const Vec x = grid.point(nodes[n]);
        const double v = field.values[nodes[n]] / lambda;
        if (t == 0.0) {
            residual[n] = lambda * std::abs(v - field.interpolate(x) / lambda);
            return;
        }
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t p = 0; p < family.size(); ++p) {
            const auto r = bsde::solve_backward(problem, x, family[p].policy, lambda, t, driver, terminal,
                                                scheme_for(config, false));
            if (r.y0 < best) {
                best = r.y0;
                se[n] = r.std_error;
                chosen[n] = p;
            }
        }
        residual[n] = lambda * std::abs(v - best);
    });
    errors.rethrow();

    double worst = 0.0, worst_se = 0.0;
    std::string witness;
    for (std::size_t n = 0; n < nodes.size(); ++n) {
        worst_se = std::max(worst_se, se[n]);
        if (residual[n] > worst || witness.empty()) {
            worst = std::max(worst, residual[n]);
            witness = "x = " + format_point(grid.point(nodes[n])) + ", policy " + family[chosen[n]].name;
        }
    }
    const double tol = 3.0 * lambda * worst_se + problem.constants().nonexp_c0 * grid.max_spacing() +
                       10.0 * config.dt;
    ConditionReport report("dynamic programming residual at t = " + format_number(t));
    report.require("dpp_residual", worst, t == 0.0 ? 1e-12 : tol, witness);
    report.flag("infimum over " + std::to_string(family.size()) + " policies (constant controls" +
                (family.size() > problem.control_count() ? " and grid feedback)" : ")"));
    return report;
}

model::SplitForm effective_split(const ControlProblem& problem)
{
    if (problem.split())
        return *problem.split();
    if (problem.constants().lip_Kz == 0.0) {
        const ControlProblem* p = &problem;
        const int d = problem.noise_dim();
        return model::SplitForm{
            [p, d](const Vec& x, const Vec& u) { return p->cost_fn()(x, Vec::Zero(d), u); },
            [](const Vec&) { return 0.0; }};
    }
    throw std::invalid_argument("representation needs a split cost psi1(x, u) + g(z) or a z-free cost");
}

double default_t_max(const ControlProblem& problem, std::uint64_t seed)
{
    const std::vector<double> grid = sde::uniform_grid(1.0, 0.01);
    double fastest = 0.0;
    for (std::size_t u = 0; u < problem.control_count(); ++u) {
        double before = 0.0, after = 0.0;
        for (std::uint64_t j = 0; j < 8; ++j) {
            const Vec a = model::quasi_random_point(problem.domain(), j + 1, 0);
            const Vec b = model::quasi_random_point(problem.domain(), j + 9, 0);
            const auto pa = sde::simulate(problem, a, sde::constant_policy(u), grid, seed, j);
            const auto pb = sde::simulate(problem, b, sde::constant_policy(u), grid, seed, j);
            before += (a - b).norm();
            after += (pa.states.back() - pb.states.back()).norm();
        }
        if (before > 0.0 && after > 0.0)
            fastest = std::max(fastest, -std::log(after / before));
        else if (before > 0.0)
            fastest = std::max(fastest, 50.0);
    }
    if (!(fastest > 0.0))
        return 50.0;
    return std::clamp(6.0 / fastest, 1.0, 50.0);
}

std::vector<double> t_grid(double t_max, std::size_t t_grid_n)
{
    if (!(t_max >= 0.0) || t_grid_n < 1)
        throw std::invalid_argument("t_grid needs t_max >= 0 and at least one point");
    if (t_grid_n == 1 || t_max == 0.0)
        return {0.0};
    std::vector<double> grid(t_grid_n);
    for (std::size_t k = 0; k < t_grid_n; ++k)
        grid[k] = t_max * static_cast<double>(k) / static_cast<double>(t_grid_n - 1);
    grid.back() = t_max;
    return grid;
}

RepresentationResult representation_value(const ControlProblem& problem, const Vec& x,
                                          const std::vector<double>& t_grid, const std::vector<NamedPolicy>& family,
                                          const MonteCarloConfig& config)
{
    const model::SplitForm split = effective_split(problem);
    return representation_value(problem, x, t_grid, family, config, split.g);
}

RepresentationResult representation_value(const ControlProblem& problem, const Vec& x,
                                          const std::vector<double>& t_grid, const std::vector<NamedPolicy>& family,
                                          const MonteCarloConfig& config,
                                          const std::function<double(const Vec& z)>& g)
{
    validate_t_grid(t_grid);
    if (family.empty())
        throw std::invalid_argument("representation_value: empty policy family");
    const model::SplitForm split = effective_split(problem);
    const bsde::TerminalFn terminal = [&problem, &split](const Vec& xt, const Vec&) {
        double best = std::numeric_limits<double>::infinity();
        for (const Vec& v : problem.controls())
            best = std::min(best, split.psi1(xt, v));
        return best;
    };

    RepresentationResult result;
    result.x = x;
    result.t_grid = t_grid;
    result.cells.resize(t_grid.size() * family.size());
    parallel::ErrorSlot errors;
    const auto cells = static_cast<std::ptrdiff_t>(result.cells.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t c = 0; c < cells; ++c) errors.run([&] {
        const auto k = static_cast<std::size_t>(c);
        Cell& cell = result.cells[k];
        cell.t = t_grid[k / family.size()];
        cell.policy = k % family.size();
        const auto r = bsde::g_expectation(g, terminal, problem, x, family[cell.policy].policy, cell.t,
                                           scheme_for(config, false));
        cell.value = r.value;
        cell.std_error = r.std_error;
    });
    errors.rethrow();

    const std::size_t best = argmin_cell(result.cells);
    result.value = result.cells[best].value;
    result.std_error = result.cells[best].std_error;
    result.argmin_t = result.cells[best].t;
    result.argmin_policy = result.cells[best].policy;
    result.policy_name = family[result.argmin_policy].name;

    const auto cut = static_cast<std::size_t>(std::floor(0.9 * static_cast<double>(t_grid.size() - 1)));
    double early = std::numeric_limits<double>::infinity();
    for (const Cell& cell : result.cells)
        if (cell.t <= t_grid[cut])
            early = std::min(early, cell.value);
    result.tail_allowance = std::max(0.0, early - result.value);
    result.tail_note = "infimum over t truncated at T_max = " + format_number(t_grid.back()) +
                       "; running infimum fell by " + format_number(result.tail_allowance) +
                       " over the last 10% of the t-grid; policies restricted to constant controls" +
                       (family.size() > problem.control_count() ? " and grid feedback" : "");
    return result;
}

std::vector<std::size_t> sample_nodes(const hjb::Grid& grid, std::size_t count)
{
    std::vector<std::size_t> active;
    for (std::size_t i = 0; i < grid.size(); ++i)
        if (grid.active(i))
            active.push_back(i);
    if (active.empty() || count == 0)
        return {};
    if (count == 1)
        return {active[active.size() / 2]};
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < count; ++k) {
        const auto pos = static_cast<std::size_t>(std::llround(static_cast<double>(k) *
                                                               static_cast<double>(active.size() - 1) /
                                                               static_cast<double>(count - 1)));
        if (out.empty() || out.back() != active[pos])
            out.push_back(active[pos]);
    }
    return out;
}

ConditionReport representation_crosscheck(const limit::LambdaSweep& sweep, const ControlProblem& problem,
                                          std::size_t node_count, const std::vector<double>& t_grid,
                                          const MonteCarloConfig& config)
{
    const model::SplitForm split = effective_split(problem);
    const hjb::Grid& grid = sweep.w0.grid;
    const auto family = policy_family(problem, &sweep.w0);
    const double h_term = problem.constants().nonexp_c0 * grid.max_spacing();
    ConditionReport report("representation crosscheck");
    const bool nonlinear = problem.split().has_value();
    const auto zero = [](const Vec&) { return 0.0; };
    std::size_t k = 0;
    for (std::size_t node : sample_nodes(grid, node_count)) {
        const Vec x = grid.point(node);
        const auto rep = representation_value(problem, x, t_grid, family, config, split.g);
        const double diff = std::abs(sweep.w0.values[node] - rep.value);
        const double tol = 3.0 * rep.std_error + sweep.last_gap() + h_term + rep.tail_allowance;
        report.require("node" + std::to_string(k), diff, tol,
                       "x = " + format_point(x) + ", w0 = " + format_number(sweep.w0.values[node]) +
                           ", formula = " + format_number(rep.value) + " at t = " + format_number(rep.argmin_t) +
                           " with " + rep.policy_name);
        if (nonlinear) {
            const auto plain = representation_value(problem, x, t_grid, family, config, zero);
            const double se = std::sqrt(rep.std_error * rep.std_error + plain.std_error * plain.std_error);
            report.require("g_below_plain" + std::to_string(k), rep.value - plain.value, 3.0 * se + 1e-12,
                           "x = " + format_point(x));
        }
        if (k == 0)
            report.flag(rep.tail_note);
        ++k;
    }
    return report;
}

RecessionFn recession_fn(const ControlProblem& problem, const std::vector<double>& lambda_seq)
{
    if (problem.split()) {
        const auto g = problem.split()->g;
        return [g](const Vec& z, std::size_t) { return g(z); };
    }
    return [problem, lambda_seq](const Vec& z, std::size_t u) {
        return limit::recession_driver(problem, z, u, lambda_seq).value;
    };
}

ConditionReport generalized_upper_bound(const limit::LambdaSweep& sweep, const ControlProblem& problem,
                                        const RecessionFn& recession, std::size_t node_count,
                                        const std::vector<double>& t_grid, const MonteCarloConfig& config)
{
    validate_t_grid(t_grid);
    const hjb::Grid& grid = sweep.w0.grid;
    const auto family = policy_family(problem, &sweep.w0);
    const bsde::DriverFn driver = [&recession](const Vec&, const Vec& z, std::size_t u) { return recession(z, u); };
    const bsde::TerminalFn terminal = [&problem](const Vec& x, const Vec&) { return problem.min_cost0(x); };
    const double h_term = problem.constants().nonexp_c0 * grid.max_spacing();
    ConditionReport report("generalized upper bound");
    std::size_t k = 0;
    for (std::size_t node : sample_nodes(grid, node_count)) {
        const Vec x = grid.point(node);
        std::vector<Cell> cells(t_grid.size() * family.size());
        parallel::ErrorSlot errors;
        const auto count = static_cast<std::ptrdiff_t>(cells.size());
#pragma omp parallel for schedule(dynamic, 1)
        for (std::ptrdiff_t c = 0; c < count; ++c) errors.run([&] {
            const auto j = static_cast<std::size_t>(c);
            Cell& cell = cells[j];
            cell.t = t_grid[j / family.size()];
            cell.policy = j % family.size();
            if (cell.t == 0.0) {
                cell.value = problem.min_cost0(x);
                return;
            }
            const auto r = bsde::solve_backward(problem, x, family[cell.policy].policy, 0.0, cell.t, driver,
                                                terminal, scheme_for(config, false));
            cell.value = r.y0;
            cell.std_error = r.std_error;
        });
        errors.rethrow();
        const Cell& best = cells[argmin_cell(cells)];
        report.require("node" + std::to_string(k), sweep.w0.values[node] - best.value,
                       3.0 * best.std_error + sweep.last_gap() + h_term + 1e-9,
                       "x = " + format_point(x) + ", bound attained at t = " + format_number(best.t) + " with " +
                           family[best.policy].name);
        ++k;
    }
    return report;
}

}  // namespace vandisc::representation
