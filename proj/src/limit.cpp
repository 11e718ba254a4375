#include "vandisc/limit.hpp"

#include "vandisc/format.hpp"
#include "vandisc/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace vandisc::limit {
namespace {

std::string format_lambda(double lambda)
{
    std::ostringstream out;
    out << "lambda = " << lambda;
    return out.str();
}

double sample(std::uint64_t seed, std::uint64_t index, std::uint64_t lane, double lo, double hi)
{
    return lo + (hi - lo) * rng::uniform(seed, rng::Stream::sampling, index, lane);
}

}  // namespace

LambdaSweep lambda_sweep(const ControlProblem& problem, const hjb::Grid& grid, const std::vector<double>& lambdas,
                         const hjb::SolverConfig& config, bool richardson)
{
    if (lambdas.size() < 3)
        throw std::invalid_argument("lambda sweep needs at least 3 values");
    for (std::size_t k = 0; k < lambdas.size(); ++k)
        if (!(lambdas[k] > 0.0) || (k > 0 && !(lambdas[k] < lambdas[k - 1])))
            throw std::invalid_argument("lambdas must be positive and strictly decreasing");

    LambdaSweep sweep;
    sweep.lambdas = lambdas;
    sweep.solver_tol = config.tol;
    for (double lambda : lambdas) {
        try {
            sweep.fields.push_back(
                hjb::solve_discounted(problem, lambda, grid, config, sweep.fields.empty() ? nullptr : &sweep.fields.back()));
        } catch (const std::exception& e) {
            throw SweepError(format_lambda(lambda) + ": " + e.what(), lambda);
        }
    }
    for (std::size_t k = 0; k + 1 < sweep.fields.size(); ++k) {
        const auto& a = sweep.fields[k].values;
        const auto& b = sweep.fields[k + 1].values;
        double gap = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            if (!grid.active(i))
                continue;
            gap = std::max(gap, std::abs(a[i] - b[i]));
            sweep.monotone_violation = std::max(sweep.monotone_violation, b[i] - a[i]);
        }
        sweep.sup_gaps.push_back(gap);
    }
    sweep.w0 = sweep.fields.back();
    if (richardson) {
        const auto& fa = sweep.fields[sweep.fields.size() - 2];
        const auto& fb = sweep.fields.back();
        const double la = fa.lambda, lb = fb.lambda;
        for (std::size_t i = 0; i < grid.size(); ++i)
            sweep.w0.values[i] = (la * fb.values[i] - lb * fa.values[i]) / (la - lb);
        sweep.w0.lambda = 0.0;
        sweep.extrapolated = true;
    }
    return sweep;
}

ConditionReport monotonicity_check(const LambdaSweep& sweep)
{
    ConditionReport report("lambda monotonicity");
    double worst = -std::numeric_limits<double>::infinity();
    std::string witness;
    const hjb::Grid& grid = sweep.w0.grid;
    for (std::size_t k = 0; k + 1 < sweep.fields.size(); ++k) {
        const auto& hi = sweep.fields[k];
        const auto& lo = sweep.fields[k + 1];
        for (std::size_t i = 0; i < grid.size(); ++i) {
            if (!grid.active(i))
                continue;
            const double inc = lo.values[i] - hi.values[i];
            if (inc > worst) {
                worst = inc;
                witness = "x = " + format_point(grid.point(i)) + ", lambdas " + std::to_string(hi.lambda) + " -> " +
                          std::to_string(lo.lambda);
            }
        }
    }
    report.require("monotone_violation", worst, 2.0 * sweep.solver_tol, witness);
    return report;
}

ConditionReport radial_monotonicity_check(const ControlProblem& problem, std::size_t sample_count,
                                          const std::vector<double>& l_grid, std::uint64_t seed)
{
    if (sample_count < 1)
        throw std::invalid_argument("radial_monotonicity_check needs sample_count >= 1");
    std::vector<double> ls;
    for (double l : l_grid)
        if (l >= 1.0)
            ls.push_back(l);
    if (ls.empty() || ls.front() != 1.0)
        ls.insert(ls.begin(), 1.0);
    std::sort(ls.begin(), ls.end());

    const int n = problem.state_dim();
    const double range = 2.0;
    double worst_drop = -std::numeric_limits<double>::infinity();
    double worst_gap = -std::numeric_limits<double>::infinity();
    std::string drop_witness, gap_witness;
    const Mat zero_a = Mat::Zero(n, n);
    const Vec zero_p = Vec::Zero(n);
    for (std::size_t k = 0; k < sample_count; ++k) {
        const Vec x = model::quasi_random_point(problem.domain(), k + 1, 0);
        Vec p(n);
        Mat a(n, n);
        std::uint64_t lane = 0;
        for (int i = 0; i < n; ++i)
            p[i] = sample(seed, k, lane++, -range, range);
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j)
                a(i, j) = a(j, i) = sample(seed, k, lane++, -range, range);
        if (k % 4 == 3) {
            // Pure second-order probes: p = 0 and A positive semidefinite.
            p.setZero();
            a = a * a.transpose();
        }
        const double h00 = hjb::hamiltonian(problem, x, zero_p, zero_a).value;
        double prev = -std::numeric_limits<double>::infinity();
        for (double l : ls) {
            const double h = hjb::hamiltonian(problem, x, l * p, l * a).value;
            if (l == 1.0) {
                const double gap = h00 - h;
                if (gap > worst_gap) {
                    worst_gap = gap;
                    gap_witness = "x = " + format_point(x) + ", p = " + format_point(p);
                }
            }
            if (std::isfinite(prev)) {
                const double drop = (prev - h) / (1.0 + std::abs(prev));
                if (drop > worst_drop) {
                    worst_drop = drop;
                    drop_witness = "x = " + format_point(x) + ", p = " + format_point(p) + ", l = " + std::to_string(l);
                }
            }
            prev = h;
        }
    }
    ConditionReport report("radial monotonicity");
    if (!std::isfinite(worst_drop))
        worst_drop = 0.0;
    report.require("radial_drop", worst_drop, 1e-12, drop_witness);
    report.require("h_above_h00", worst_gap, 1e-12 * (1.0 + problem.constants().cap_M0), gap_witness);
    return report;
}

bool discrete_derivatives(const hjb::Grid& grid, const std::vector<double>& values, std::size_t node, Vec& p,
                          Mat& a)
{
    const int n = grid.dim();
    p = Vec::Zero(n);
    a = Mat::Zero(n, n);
    const Vec& h = grid.spacing();
    auto at = [&](std::array<int, kMaxDim> off, double& out) {
        const std::ptrdiff_t j = grid.shifted(node, off);
        if (j < 0)
            return false;
        out = values[static_cast<std::size_t>(j)];
        return true;
    };
    const double v = values[node];
    for (int i = 0; i < n; ++i) {
        std::array<int, kMaxDim> off{};
        double up = 0.0, down = 0.0;
        off[static_cast<std::size_t>(i)] = 1;
        if (!at(off, up))
            return false;
        off[static_cast<std::size_t>(i)] = -1;
        if (!at(off, down))
            return false;
        p[i] = (up - down) / (2 * h[i]);
        a(i, i) = (up - 2 * v + down) / (h[i] * h[i]);
    }
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            double pp = 0.0, pm = 0.0, mp = 0.0, mm = 0.0;
            std::array<int, kMaxDim> off{};
            const auto si = static_cast<std::size_t>(i), sj = static_cast<std::size_t>(j);
            off[si] = 1;
            off[sj] = 1;
            if (!at(off, pp))
                return false;
            off[sj] = -1;
            if (!at(off, pm))
                return false;
            off[si] = -1;
            if (!at(off, mm))
                return false;
            off[sj] = 1;
            if (!at(off, mp))
                return false;
            a(i, j) = a(j, i) = (pp - pm - mp + mm) / (4 * h[i] * h[j]);
        }
    return true;
}

ConditionReport subsolution_residual(const LambdaSweep& sweep, const ControlProblem& problem, double tol_residual)
{
    const hjb::Grid& grid = sweep.w0.grid;
    const auto full = hjb::default_l_grid();
    const double l_cap = 1.0 / sweep.lambdas.back();
    std::vector<double> restricted;
    for (double l : full)
        if (l <= l_cap)
            restricted.push_back(l);
    if (restricted.empty() || restricted.back() < l_cap)
        restricted.push_back(l_cap);
    const double threshold = hjb::kDivergenceFactor * problem.constants().cap_M0;
    const auto h = hjb::hamiltonian_fn(problem);

    ConditionReport report("maximal subsolution residual");
    double worst = -std::numeric_limits<double>::infinity();
    std::string witness;
    std::size_t checked = 0, flagged = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!grid.interior(i))
            continue;
        Vec p;
        Mat a;
        if (!discrete_derivatives(grid, sweep.w0.values, i, p, a))
            continue;
        const Vec x = grid.point(i);
        const auto divergence = hjb::envelope_hamiltonian(h, problem.constants().cap_M0, x, p, a, full, threshold);
        if (divergence.diverged) {
            ++flagged;
            continue;
        }
        const auto env = hjb::envelope_hamiltonian(h, problem.constants().cap_M0, x, p, a, restricted, threshold);
        const double residual = sweep.w0.values[i] + env.value;
        ++checked;
        if (residual > worst) {
            worst = residual;
            witness = "x = " + format_point(x);
        }
    }
    if (checked == 0) {
        report.mark_not_applicable("no interior node with a bounded envelope");
        return report;
    }
    report.require("residual", worst, tol_residual, witness);
    if (flagged > 0)
        report.flag(std::to_string(flagged) + " interior nodes with a diverging envelope were skipped");
    return report;
}

ConditionReport constancy_check(const LambdaSweep& sweep, const ControlProblem& problem, std::size_t sample_count,
                                std::uint64_t seed)
{
    ConditionReport report("constancy");
    const int n = problem.state_dim();
    const double threshold = hjb::kDivergenceFactor * problem.constants().cap_M0;
    const auto l_grid = hjb::default_l_grid();
    const auto h = hjb::hamiltonian_fn(problem);
    const Vec center = problem.domain().center();
    std::size_t diverged = 0;
    for (std::size_t k = 0; k < sample_count; ++k) {
        // Interior samples: quasi-random points pulled 10% toward the center.
        const Vec x = center + 0.9 * (model::quasi_random_point(problem.domain(), k + 1, 0) - center);
        Vec p(n);
        for (int i = 0; i < n; ++i)
            p[i] = rng::uniform(seed, rng::Stream::sampling, k, static_cast<std::uint64_t>(i)) * 2.0 - 1.0;
        if (p.norm() < 1e-6)
            p.setOnes();
        p *= 10.0 / p.norm();
        Mat a(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j)
                a(i, j) = a(j, i) = rng::uniform(seed, rng::Stream::sampling, k, 8 + static_cast<std::uint64_t>(i * n + j)) - 0.5;
        if (hjb::envelope_hamiltonian(h, problem.constants().cap_M0, x, p, a, l_grid, threshold).diverged)
            ++diverged;
    }
    const double fraction = static_cast<double>(diverged) / static_cast<double>(sample_count);
    report.record(Check{"divergence_fraction", fraction, 0.95, fraction >= 0.95, {}});
    if (fraction < 0.95) {
        report.mark_not_applicable("envelope diverges at only " + std::to_string(fraction * 100.0) +
                                   "% of samples");
        return report;
    }
    const hjb::Grid& grid = sweep.w0.grid;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    std::size_t lo_at = 0, hi_at = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!grid.active(i))
            continue;
        if (sweep.w0.values[i] < lo) {
            lo = sweep.w0.values[i];
            lo_at = i;
        }
        if (sweep.w0.values[i] > hi) {
            hi = sweep.w0.values[i];
            hi_at = i;
        }
    }
    const double tol = problem.constants().nonexp_c0 * grid.max_spacing() * std::sqrt(static_cast<double>(n)) +
                       2.0 * sweep.solver_tol + sweep.last_gap();
    report.require("w0_oscillation", hi - lo, tol,
                   "max at " + format_point(grid.point(hi_at)) + ", min at " + format_point(grid.point(lo_at)));
    return report;
}

Recession recession_driver(const ControlProblem& problem, const Vec& z, std::size_t control,
                           const std::vector<double>& lambda_seq, std::uint64_t seed)
{
    if (lambda_seq.size() < 2)
        throw std::invalid_argument("recession_driver needs at least 2 lambdas");
    for (std::size_t k = 0; k < lambda_seq.size(); ++k)
        if (!(lambda_seq[k] > 0.0) || (k > 0 && !(lambda_seq[k] < lambda_seq[k - 1])))
            throw std::invalid_argument("lambda_seq must be positive and strictly decreasing");
    if (z.size() != problem.noise_dim())
        throw std::invalid_argument("z has the wrong dimension");
    if (control >= problem.control_count())
        throw std::out_of_range("control index out of range");

    Recession r;
    for (std::uint64_t j = 0; j < 3; ++j)
        r.xs.push_back(model::quasi_random_point(problem.domain(), seed * 3 + j + 1, 0));
    r.sequences.resize(r.xs.size());
    for (std::size_t j = 0; j < r.xs.size(); ++j)
        for (double lambda : lambda_seq)
            r.sequences[j].push_back(lambda * problem.cost(r.xs[j], z / lambda, control));
    for (std::size_t k = 0; k < lambda_seq.size(); ++k) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (const auto& s : r.sequences) {
            lo = std::min(lo, s[k]);
            hi = std::max(hi, s[k]);
        }
        r.spreads.push_back(hi - lo);
    }
    const std::size_t last = lambda_seq.size() - 1;
    const double la = lambda_seq[last - 1], lb = lambda_seq[last];
    double lo = std::numeric_limits<double>::infinity(), hi = -lo, sum = 0.0;
    for (const auto& s : r.sequences) {
        const double limit = (la * s[last] - lb * s[last - 1]) / (la - lb);
        sum += limit;
        lo = std::min(lo, limit);
        hi = std::max(hi, limit);
        for (std::size_t k = 2; k < s.size(); ++k) {
            const double d1 = std::abs(s[k - 1] - s[k - 2]);
            const double d2 = std::abs(s[k] - s[k - 1]);
            if (d2 > d1 * (1.0 + 1e-9) + 1e-12)
                r.cauchy = false;
        }
    }
    r.value = sum / static_cast<double>(r.sequences.size());
    r.spread = hi - lo;
    const double scale = 1.0 + std::abs(r.value);
    r.converged = r.cauchy && r.spreads.back() <= r.spreads.front() + 1e-12 * scale &&
                  r.spread <= r.spreads.back() + 1e-12 * scale;
    return r;
}

ConditionReport pointwise_cost_bound(const LambdaSweep& sweep, const ControlProblem& problem)
{
    const hjb::Grid& grid = sweep.w0.grid;
    double worst = -std::numeric_limits<double>::infinity();
    std::string witness;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!grid.active(i))
            continue;
        const Vec x = grid.point(i);
        const double excess = sweep.w0.values[i] - problem.min_cost0(x);
        if (excess > worst) {
            worst = excess;
            witness = "x = " + format_point(x);
        }
    }
    ConditionReport report("pointwise cost bound");
    report.require("w0_minus_min_cost", worst, std::max(1e-9, 2.0 * sweep.solver_tol), witness);
    return report;
}

}  // namespace vandisc::limit
