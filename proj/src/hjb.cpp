#include "vandisc/hjb.hpp"

#include "vandisc/format.hpp"
#include "vandisc/parallel.hpp"
#include "vandisc/rng.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <sstream>

namespace vandisc::hjb {
namespace {

void require_symmetric(const Mat& a, int n)
{
    if (a.rows() != n || a.cols() != n)
        throw std::invalid_argument("A must be an N x N matrix");
    const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw std::invalid_argument("A must be symmetric");
}

}  // namespace

Grid Grid::over(const model::Domain& domain, int nodes_per_axis)
{
    return over(domain, std::vector<int>(static_cast<std::size_t>(domain.dim()), nodes_per_axis));
}

Grid Grid::over(const model::Domain& domain, const std::vector<int>& nodes_per_axis)
{
    Grid g;
    g.dim_ = domain.dim();
    if (static_cast<int>(nodes_per_axis.size()) != g.dim_)
        throw std::invalid_argument("grid needs one node count per axis");
    g.nodes_ = nodes_per_axis;
    g.lower_ = domain.lower();
    g.upper_ = domain.upper();
    g.spacing_ = Vec::Zero(g.dim_);
    g.size_ = 1;
    for (int i = 0; i < g.dim_; ++i) {
        const int n = g.nodes_[static_cast<std::size_t>(i)];
        if (n < 3)
            throw std::invalid_argument("grid needs at least 3 nodes per axis");
        g.spacing_[i] = (g.upper_[i] - g.lower_[i]) / (n - 1);
        g.size_ *= static_cast<std::size_t>(n);
    }
    if (g.size_ > 20'000'000)
        throw std::invalid_argument("grid too large");
    g.active_.resize(g.size_);
    const double slack = 1e-12 * std::max(1.0, g.upper_.cwiseAbs().maxCoeff());
    for (std::size_t i = 0; i < g.size_; ++i)
        g.active_[i] = domain.contains(g.point(i), slack) ? 1 : 0;
    return g;
}

std::array<int, kMaxDim> Grid::coords(std::size_t index) const
{
    std::array<int, kMaxDim> c{};
    for (int i = 0; i < dim_; ++i) {
        const auto n = static_cast<std::size_t>(nodes_[static_cast<std::size_t>(i)]);
        c[static_cast<std::size_t>(i)] = static_cast<int>(index % n);
        index /= n;
    }
    return c;
}

Vec Grid::point(std::size_t index) const
{
    const auto c = coords(index);
    Vec x(dim_);
    for (int i = 0; i < dim_; ++i) {
        const int k = c[static_cast<std::size_t>(i)];
        const int n = nodes_[static_cast<std::size_t>(i)];
        x[i] = k == n - 1 ? upper_[i] : lower_[i] + k * spacing_[i];
    }
    return x;
}

std::ptrdiff_t Grid::shifted(std::size_t index, const std::array<int, kMaxDim>& offset) const
{
    auto c = coords(index);
    std::size_t flat = 0;
    std::size_t stride = 1;
    for (int i = 0; i < dim_; ++i) {
        const auto s = static_cast<std::size_t>(i);
        const int k = c[s] + offset[s];
        if (k < 0 || k >= nodes_[s])
            return -1;
        flat += static_cast<std::size_t>(k) * stride;
        stride *= static_cast<std::size_t>(nodes_[s]);
    }
    return active_[flat] ? static_cast<std::ptrdiff_t>(flat) : -1;
}

bool Grid::interior(std::size_t index) const
{
    if (!active(index))
        return false;
    for (int i = 0; i < dim_; ++i)
        for (int dir : {-1, 1}) {
            std::array<int, kMaxDim> off{};
            off[static_cast<std::size_t>(i)] = dir;
            if (shifted(index, off) < 0)
                return false;
        }
    return true;
}

std::size_t Grid::nearest_active(const Vec& x) const
{
    std::size_t flat = 0;
    std::size_t stride = 1;
    for (int i = 0; i < dim_; ++i) {
        const int n = nodes_[static_cast<std::size_t>(i)];
        const double r = std::round((x[i] - lower_[i]) / spacing_[i]);
        const int k = static_cast<int>(std::clamp(r, 0.0, static_cast<double>(n - 1)));
        flat += static_cast<std::size_t>(k) * stride;
        stride *= static_cast<std::size_t>(n);
    }
    if (active_[flat])
        return flat;
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < size_; ++i) {
        if (!active_[i])
            continue;
        const double d = (point(i) - x).squaredNorm();
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

double Grid::interpolate(const std::vector<double>& values, const Vec& x) const
{
    if (values.size() != size_)
        throw std::invalid_argument("value vector does not match the grid");
    std::array<int, kMaxDim> base{};
    std::array<double, kMaxDim> frac{};
    for (int i = 0; i < dim_; ++i) {
        const auto s = static_cast<std::size_t>(i);
        const double t = std::clamp((x[i] - lower_[i]) / spacing_[i], 0.0, static_cast<double>(nodes_[s] - 1));
        const int k = std::min(static_cast<int>(std::floor(t)), nodes_[s] - 2);
        base[s] = k;
        frac[s] = t - k;
    }
    double sum = 0.0, weight = 0.0;
    for (int mask = 0; mask < (1 << dim_); ++mask) {
        double w = 1.0;
        std::size_t flat = 0, stride = 1;
        for (int i = 0; i < dim_; ++i) {
            const auto s = static_cast<std::size_t>(i);
            const int bit = (mask >> i) & 1;
            w *= bit ? frac[s] : 1.0 - frac[s];
            flat += static_cast<std::size_t>(base[s] + bit) * stride;
            stride *= static_cast<std::size_t>(nodes_[s]);
        }
        if (w > 0.0 && active_[flat]) {
            sum += w * values[flat];
            weight += w;
        }
    }
    if (weight > 1e-12)
        return sum / weight;
    return values[nearest_active(x)];
}

bool operator==(const Grid& a, const Grid& b)
{
    return a.dim_ == b.dim_ && a.nodes_ == b.nodes_ && a.lower_ == b.lower_ && a.upper_ == b.upper_ &&
           a.active_ == b.active_;
}

HamiltonianProbe hamiltonian(const ControlProblem& problem, const Vec& x, const Vec& p, const Mat& A)
{
    const int n = problem.state_dim();
    if (x.size() != n || p.size() != n)
        throw std::invalid_argument("x and p must have the state dimension");
    require_symmetric(A, n);
    HamiltonianProbe probe{x, p, A, -std::numeric_limits<double>::infinity(), 0};
    for (std::size_t u = 0; u < problem.control_count(); ++u) {
        const Vec b = problem.drift(x, u);
        const Mat s = problem.diffusion(x, u);
        const Vec z = s.transpose() * p;
        const double bracket = -p.dot(b) - 0.5 * (s * s.transpose() * A).trace() - problem.cost(x, z, u);
        if (bracket > probe.value) {
            probe.value = bracket;
            probe.argmax = u;
        }
    }
    return probe;
}

double capped_hamiltonian(const ControlProblem& problem, const Vec& x, const Vec& p, const Mat& A)
{
    return std::min(problem.constants().cap_M0, hamiltonian(problem, x, p, A).value);
}

HamiltonianFn hamiltonian_fn(const ControlProblem& problem)
{
    return [&problem](const Vec& x, const Vec& p, const Mat& A) { return hamiltonian(problem, x, p, A).value; };
}

std::vector<double> default_l_grid()
{
    std::vector<double> grid;
    for (int e = -10; e <= 10; ++e)
        grid.push_back(std::ldexp(1.0, e));
    return grid;
}

Envelope envelope_hamiltonian(const HamiltonianFn& h, double cap_M0, const Vec& x, const Vec& p, const Mat& A,
                              const std::vector<double>& l_grid, double divergence_threshold)
{
    if (l_grid.empty())
        throw std::invalid_argument("l_grid must not be empty");
    for (std::size_t i = 0; i < l_grid.size(); ++i)
        if (!(l_grid[i] > 0.0) || (i > 0 && !(l_grid[i] > l_grid[i - 1])))
            throw std::invalid_argument("l_grid must be positive and increasing");
    double best = -std::numeric_limits<double>::infinity();
    double last = 0.0, previous = 0.0;
    for (std::size_t i = 0; i < l_grid.size(); ++i) {
        previous = last;
        last = h(x, l_grid[i] * p, l_grid[i] * A);
        best = std::max(best, last);
    }
    Envelope env;
    env.diverged = last > divergence_threshold && (l_grid.size() == 1 || last > previous);
    env.value = std::min(cap_M0, best);
    return env;
}

Envelope envelope_hamiltonian(const ControlProblem& problem, const Vec& x, const Vec& p, const Mat& A,
                              const std::vector<double>& l_grid, double divergence_threshold)
{
    return envelope_hamiltonian(hamiltonian_fn(problem), problem.constants().cap_M0, x, p, A, l_grid,
                                divergence_threshold);
}

std::vector<double> discrete_gradient(const Grid& grid, const std::vector<double>& v)
{
    const int n = grid.dim();
    std::vector<double> grad(grid.size() * static_cast<std::size_t>(n), 0.0);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!grid.active(i))
            continue;
        for (int a = 0; a < n; ++a) {
            std::array<int, kMaxDim> off{};
            off[static_cast<std::size_t>(a)] = 1;
            const std::ptrdiff_t up = grid.shifted(i, off);
            off[static_cast<std::size_t>(a)] = -1;
            const std::ptrdiff_t down = grid.shifted(i, off);
            const double h = grid.spacing()[a];
            double g = 0.0;
            if (up >= 0 && down >= 0)
                g = (v[static_cast<std::size_t>(up)] - v[static_cast<std::size_t>(down)]) / (2 * h);
            else if (up >= 0)
                g = (v[static_cast<std::size_t>(up)] - v[i]) / h;
            else if (down >= 0)
                g = (v[i] - v[static_cast<std::size_t>(down)]) / h;
            grad[i * static_cast<std::size_t>(n) + static_cast<std::size_t>(a)] = g;
        }
    }
    return grad;
}

std::vector<Stencil> build_stencils(const ControlProblem& problem, const Grid& grid,
                                    const std::vector<double>& gradient)
{
    const int n = grid.dim();
    const std::size_t controls = problem.control_count();
    std::vector<Stencil> out(grid.size() * controls);
    parallel::ErrorSlot errors;
    const auto nodes = static_cast<std::ptrdiff_t>(grid.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t node = 0; node < nodes; ++node) errors.run([&] {
        const auto i = static_cast<std::size_t>(node);
        if (!grid.active(i))
            return;
        const Vec x = grid.point(i);
        const Vec p = gradient.empty() ? Vec::Zero(n)
                                       : Vec(Eigen::Map<const Vec>(gradient.data() + i * static_cast<std::size_t>(n), n));
        for (std::size_t u = 0; u < controls; ++u) {
            Stencil& st = out[i * controls + u];
            const Mat s = problem.diffusion(x, u);
            const Mat a = s * s.transpose();
            Vec b = problem.drift(x, u);
            st.source = problem.cost0(x, u);
            // psi(x, s^T p, u) - psi(x, 0, u) = gamma . s^T p, folded into the drift.
            const Vec z = s.transpose() * p;
            const double zz = z.squaredNorm();
            if (zz > 0.0) {
                const Vec gamma = (problem.cost(x, z, u) - st.source) / zz * z;
                b += s * gamma;
            }
            const Vec& h = grid.spacing();
            auto add = [&](const std::array<int, kMaxDim>& off, double rate) {
                if (rate <= 0.0)
                    return;
                const std::ptrdiff_t y = grid.shifted(i, off);
                if (y < 0)
                    return;
                st.neighbor[static_cast<std::size_t>(st.count)] = static_cast<std::int32_t>(y);
                st.rate[static_cast<std::size_t>(st.count)] = rate;
                ++st.count;
                st.total_rate += rate;
            };
            for (int k = 0; k < n; ++k) {
                double cross = 0.0;
                for (int j = 0; j < n; ++j)
                    if (j != k)
                        cross += std::abs(a(k, j)) / (2 * h[k] * h[j]);
                const double diag = a(k, k) / (2 * h[k] * h[k]) - cross;
                if (diag < -1e-12 * (a(k, k) / (2 * h[k] * h[k]) + cross)) {
                    double ratio = 0.0;
                    for (int j = 0; j < n; ++j)
                        if (j != k)
                            ratio = std::max(ratio, std::abs(a(k, j)) / std::max(a(k, k), 1e-300));
                    std::ostringstream msg;
                    msg << "monotone stencil violated at x = " << format_point(x) << " for control " << u
                        << ": axis " << (k + 1) << " needs h_j / h_" << (k + 1) << " >= " << ratio
                        << " for every cross-coupled axis j";
                    throw CflError(msg.str());
                }
                std::array<int, kMaxDim> off{};
                off[static_cast<std::size_t>(k)] = 1;
                add(off, std::max(diag, 0.0) + std::max(b[k], 0.0) / h[k]);
                off[static_cast<std::size_t>(k)] = -1;
                add(off, std::max(diag, 0.0) + std::max(-b[k], 0.0) / h[k]);
            }
            for (int k = 0; k < n; ++k)
                for (int j = k + 1; j < n; ++j) {
                    const double q = std::abs(a(k, j)) / (2 * h[k] * h[j]);
                    if (q <= 0.0)
                        continue;
                    const int sj = a(k, j) > 0 ? 1 : -1;
                    std::array<int, kMaxDim> off{};
                    off[static_cast<std::size_t>(k)] = 1;
                    off[static_cast<std::size_t>(j)] = sj;
                    add(off, q);
                    off[static_cast<std::size_t>(k)] = -1;
                    off[static_cast<std::size_t>(j)] = -sj;
                    add(off, q);
                }
        }
    });
    errors.rethrow();
    return out;
}

double node_update(const Stencil* stencils, std::size_t control_count, const std::vector<double>& v, double lambda,
                   std::size_t* argmin)
{
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_u = 0;
    for (std::size_t u = 0; u < control_count; ++u) {
        const Stencil& st = stencils[u];
        double acc = st.source;
        for (int k = 0; k < st.count; ++k)
            acc += st.rate[static_cast<std::size_t>(k)] * v[static_cast<std::size_t>(st.neighbor[static_cast<std::size_t>(k)])];
        const double value = acc / (lambda + st.total_rate);
        if (value < best) {
            best = value;
            best_u = u;
        }
    }
    if (argmin)
        *argmin = best_u;
    return best;
}

namespace kernels {
namespace {

void sweep_node(const Grid& grid, const std::vector<Stencil>& stencils, std::size_t control_count,
                const std::vector<double>& v, double lambda, std::vector<double>& out, std::vector<int>& argmin,
                std::size_t i)
{
    if (!grid.active(i)) {
        out[i] = 0.0;
        argmin[i] = -1;
        return;
    }
    std::size_t u = 0;
    out[i] = node_update(stencils.data() + i * control_count, control_count, v, lambda, &u);
    argmin[i] = static_cast<int>(u);
}

}  // namespace

void bellman_sweep_serial(const Grid& grid, const std::vector<Stencil>& stencils, std::size_t control_count,
                          const std::vector<double>& v, double lambda, std::vector<double>& out,
                          std::vector<int>& argmin)
{
    out.resize(grid.size());
    argmin.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
        sweep_node(grid, stencils, control_count, v, lambda, out, argmin, i);
}

void bellman_sweep_parallel(const Grid& grid, const std::vector<Stencil>& stencils, std::size_t control_count,
                            const std::vector<double>& v, double lambda, std::vector<double>& out,
                            std::vector<int>& argmin)
{
    out.resize(grid.size());
    argmin.resize(grid.size());
    const auto nodes = static_cast<std::ptrdiff_t>(grid.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < nodes; ++i)
        sweep_node(grid, stencils, control_count, v, lambda, out, argmin, static_cast<std::size_t>(i));
}

}  // namespace kernels

namespace {

// Solves (lambda + Q_u) V(x) - sum_y q_y V(y) = c_u for a fixed policy.
std::vector<double> evaluate_policy(const Grid& grid, const std::vector<Stencil>& stencils, std::size_t controls,
                                    const std::vector<int>& policy, double lambda)
{
    const auto size = static_cast<Eigen::Index>(grid.size());
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(grid.size() * 5);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(size);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto row = static_cast<Eigen::Index>(i);
        if (!grid.active(i)) {
            triplets.emplace_back(row, row, 1.0);
            continue;
        }
        const Stencil& st = stencils[i * controls + static_cast<std::size_t>(policy[i])];
        triplets.emplace_back(row, row, lambda + st.total_rate);
        for (int k = 0; k < st.count; ++k)
            triplets.emplace_back(row, st.neighbor[static_cast<std::size_t>(k)], -st.rate[static_cast<std::size_t>(k)]);
        rhs[row] = st.source;
    }
    Eigen::SparseMatrix<double> m(size, size);
    m.setFromTriplets(triplets.begin(), triplets.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(m);
    if (lu.info() != Eigen::Success)
        throw std::runtime_error("policy evaluation: factorization failed");
    const Eigen::VectorXd v = lu.solve(rhs);
    return std::vector<double>(v.data(), v.data() + v.size());
}

}  // namespace

ValueField solve_discounted(const ControlProblem& problem, double lambda, const Grid& grid,
                            const SolverConfig& config, const ValueField* warm_start)
{
    if (!(lambda > 0.0))
        throw std::invalid_argument("lambda must be positive");
    if (!(config.tol > 0.0) || config.max_iter < 1)
        throw std::invalid_argument("solver needs tol > 0 and max_iter >= 1");
    if (grid.dim() != problem.state_dim())
        throw std::invalid_argument("grid dimension does not match the problem");
    const std::size_t controls = problem.control_count();
    const std::size_t size = grid.size();

    std::vector<double> v(size, 0.0);
    if (warm_start) {
        if (!(warm_start->grid == grid))
            throw std::invalid_argument("warm start lives on a different grid");
        for (std::size_t i = 0; i < size; ++i)
            v[i] = warm_start->values[i] / lambda;
    } else {
        for (std::size_t i = 0; i < size; ++i)
            if (grid.active(i))
                v[i] = problem.min_cost0(grid.point(i)) / lambda;
    }

    auto sweep = config.parallel ? kernels::bellman_sweep_parallel : kernels::bellman_sweep_serial;
    const bool z_coupled = problem.constants().lip_Kz > 0.0;
    std::vector<int> policy(size, -1);
    std::vector<double> improved;
    std::vector<int> argmin;
    std::vector<Stencil> stencils;
    double delta = std::numeric_limits<double>::infinity();
    std::size_t iter = 0;
    while (iter < config.max_iter) {
        ++iter;
        stencils = build_stencils(problem, grid, z_coupled ? discrete_gradient(grid, v) : std::vector<double>{});
        sweep(grid, stencils, controls, v, lambda, improved, argmin);
        // Keep the incumbent control unless another is better beyond rounding.
        for (std::size_t i = 0; i < size; ++i) {
            if (!grid.active(i) || policy[i] < 0 || policy[i] == argmin[i]) {
                policy[i] = argmin[i];
                continue;
            }
            const Stencil* st = stencils.data() + i * controls;
            const double incumbent = node_update(st + policy[i], 1, v, lambda, nullptr);
            if (incumbent > improved[i] + 1e-14 * (1.0 + std::abs(improved[i])))
                policy[i] = argmin[i];
        }
        std::vector<double> next = evaluate_policy(grid, stencils, controls, policy, lambda);
        delta = 0.0;
        for (std::size_t i = 0; i < size; ++i)
            delta = std::max(delta, lambda * std::abs(next[i] - v[i]));
        v = std::move(next);
        if (delta < config.tol)
            break;
    }

    ValueField field;
    field.grid = grid;
    field.lambda = lambda;
    field.iterations = iter;
    field.tol = config.tol;
    stencils = build_stencils(problem, grid, z_coupled ? discrete_gradient(grid, v) : std::vector<double>{});
    sweep(grid, stencils, controls, v, lambda, improved, argmin);
    field.values.resize(size);
    field.policy.assign(size, -1);
    for (std::size_t i = 0; i < size; ++i) {
        if (!grid.active(i))
            continue;
        field.values[i] = lambda * v[i];
        field.residual_norm = std::max(field.residual_norm, lambda * std::abs(v[i] - improved[i]));
        // Lowest index among controls tied with the minimum.
        const Stencil* st = stencils.data() + i * controls;
        const double tie = 1e-12 * (1.0 + std::abs(improved[i]));
        for (std::size_t u = 0; u < controls; ++u)
            if (node_update(st + u, 1, v, lambda, nullptr) <= improved[i] + tie) {
                field.policy[i] = static_cast<int>(u);
                break;
            }
    }
    if (!(delta < config.tol)) {
        char msg[160];
        std::snprintf(msg, sizeof msg, "policy iteration did not converge after %zu iterations (residual %.3g)",
                      iter, field.residual_norm);
        throw ConvergenceError(msg, field.residual_norm, iter);
    }
    return field;
}

sde::Policy feedback_policy(const ValueField& field)
{
    auto shared = std::make_shared<const ValueField>(field);
    return [shared](double, const Vec& x) {
        const int u = shared->policy[shared->grid.nearest_active(x)];
        return static_cast<std::size_t>(std::max(u, 0));
    };
}

ConditionReport bound_check(const ValueField& field, const ControlProblem& problem, double value_tol,
                            double lipschitz_slack)
{
    ConditionReport report("value field bounds");
    const Grid& g = field.grid;
    double worst_value = 0.0, worst_lip = 0.0;
    std::size_t value_at = 0, lip_at = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!g.active(i))
            continue;
        if (std::abs(field.values[i]) > worst_value) {
            worst_value = std::abs(field.values[i]);
            value_at = i;
        }
        for (int a = 0; a < g.dim(); ++a) {
            std::array<int, kMaxDim> off{};
            off[static_cast<std::size_t>(a)] = 1;
            const std::ptrdiff_t j = g.shifted(i, off);
            if (j < 0)
                continue;
            const double q = std::abs(field.values[static_cast<std::size_t>(j)] - field.values[i]) / g.spacing()[a];
            if (q > worst_lip) {
                worst_lip = q;
                lip_at = i;
            }
        }
    }
    const auto& c = problem.constants();
    report.require("abs_lambda_v", worst_value, c.bound_M + value_tol, "x = " + format_point(g.point(value_at)));
    report.require("lipschitz", worst_lip, c.nonexp_c0 + lipschitz_slack, "x = " + format_point(g.point(lip_at)));
    return report;
}

ConditionReport comparison_gap(const ValueField& field1, const ValueField& field2, const ControlProblem& problem1,
                               const ControlProblem& problem2, std::size_t z_samples)
{
    if (!(field1.grid == field2.grid))
        throw std::invalid_argument("comparison_gap needs fields on the same grid");
    if (field1.lambda != field2.lambda)
        throw std::invalid_argument("comparison_gap needs fields for the same lambda");
    if (problem1.control_count() != problem2.control_count() || problem1.noise_dim() != problem2.noise_dim())
        throw std::invalid_argument("comparison_gap needs problems with matching control sets");
    const Grid& g = field1.grid;
    const int d = problem1.noise_dim();
    const double radius = 10.0 * std::max({problem1.constants().lip_Kz, problem2.constants().lip_Kz, 1.0});
    std::vector<Vec> zs{Vec::Zero(d)};
    for (std::size_t k = 1; k < z_samples; ++k) {
        Vec z(d);
        for (int j = 0; j < d; ++j)
            z[j] = radius * (2.0 * rng::halton(k, rng::halton_base(static_cast<std::size_t>(j))) - 1.0);
        zs.push_back(z);
    }
    double sup_psi = 0.0;
    std::string psi_witness;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!g.active(i))
            continue;
        const Vec x = g.point(i);
        for (std::size_t u = 0; u < problem1.control_count(); ++u)
            for (const Vec& z : zs) {
                const double diff = std::abs(problem1.cost(x, z, u) - problem2.cost(x, z, u));
                if (diff > sup_psi) {
                    sup_psi = diff;
                    psi_witness = "x = " + format_point(x) + ", z = " + format_point(z) + ", u = " + std::to_string(u);
                }
            }
    }
    double gap12 = -std::numeric_limits<double>::infinity(), gap21 = gap12;
    std::size_t at12 = 0, at21 = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!g.active(i))
            continue;
        const double diff = field1.values[i] - field2.values[i];
        if (diff > gap12) {
            gap12 = diff;
            at12 = i;
        }
        if (-diff > gap21) {
            gap21 = -diff;
            at21 = i;
        }
    }
    const double slack = 2.0 * (field1.tol + field2.tol);
    ConditionReport report("comparison gap");
    report.record(Check{"sup_psi_difference", sup_psi, sup_psi, true, psi_witness});
    report.require("gap_12", gap12, sup_psi + slack, "x = " + format_point(g.point(at12)));
    report.require("gap_21", gap21, sup_psi + slack, "x = " + format_point(g.point(at21)));
    return report;
}

}  // namespace vandisc::hjb
