#include "vandisc/conditions.hpp"

#include "vandisc/bsde.hpp"
#include "vandisc/format.hpp"
#include "vandisc/parallel.hpp"
#include "vandisc/rng.hpp"
#include "vandisc/sde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace vandisc::conditions {
namespace {

constexpr double kCheckTol = 1e-12;

Vec sample_point(const model::Domain& domain, std::uint64_t seed, std::uint64_t index, std::uint64_t step)
{
    Vec unit(domain.dim());
    for (int i = 0; i < domain.dim(); ++i)
        unit[i] = rng::uniform(seed, rng::Stream::sampling, index, step, static_cast<std::uint32_t>(i));
    return domain.from_unit(unit);
}

std::size_t sample_control(const ControlProblem& problem, std::uint64_t seed, std::uint64_t index)
{
    const double draw = rng::uniform(seed, rng::Stream::sampling, index, 2);
    return std::min(problem.control_count() - 1,
                    static_cast<std::size_t>(draw * static_cast<double>(problem.control_count())));
}

// Candidate order: v = u first, then ascending index.
template <class Accept>
std::optional<std::size_t> select(std::size_t u, std::size_t count, Accept&& accept)
{
    if (accept(u))
        return u;
    for (std::size_t v = 0; v < count; ++v)
        if (v != u && accept(v))
            return v;
    return std::nullopt;
}

struct Stats {
    double mean = 0.0;
    double se = 0.0;
};

Stats ordered_stats(const std::vector<double>& values)
{
    Stats s;
    const auto n = static_cast<double>(values.size());
    double sum = 0.0;
    for (double v : values)
        sum += v;
    s.mean = sum / n;
    if (values.size() > 1) {
        double sq = 0.0;
        for (double v : values)
            sq += (v - s.mean) * (v - s.mean);
        s.se = std::sqrt(sq / (n - 1.0) / n);
    }
    return s;
}

}  // namespace

double g_function(const ControlProblem& problem, const Vec& x, const Vec& xp, std::size_t u, std::size_t v)
{
    const Vec dx = x - xp;
    const double ds = (problem.diffusion(x, u) - problem.diffusion(xp, v)).norm();
    return dx.dot(problem.drift(x, u) - problem.drift(xp, v)) + 0.5 * ds * ds +
           problem.constants().lip_Kz * ds * dx.norm();
}

std::vector<Vec> z_ball(const ControlProblem& problem, std::size_t count)
{
    const int d = problem.noise_dim();
    const double radius = 10.0 * std::max(problem.constants().lip_Kz, 1.0);
    std::vector<Vec> zs{Vec::Zero(d)};
    for (std::size_t k = 1; k < count; ++k) {
        Vec z(d);
        for (int j = 0; j < d; ++j)
            z[j] = radius * (2.0 * rng::halton(k, rng::halton_base(static_cast<std::size_t>(j))) - 1.0);
        zs.push_back(z);
    }
    return zs;
}

double psi_tilde(const ControlProblem& problem, const Vec& x, const Vec& xp, std::size_t u, std::size_t v,
                 const std::vector<Vec>& zs)
{
    const double c0_dist = problem.constants().nonexp_c0 * (x - xp).norm();
    if (const auto& split = problem.split()) {
        return std::abs(split->psi1(x, problem.control(u)) - split->psi1(xp, problem.control(v))) - c0_dist;
    }
    double worst = -std::numeric_limits<double>::infinity();
    for (const Vec& z : zs)
        worst = std::max(worst, std::abs(problem.cost(x, z, u) - problem.cost(xp, z, v)));
    return worst - c0_dist;
}

NonexpansivityResult nonexpansivity_check(const ControlProblem& problem, std::size_t pair_count,
                                          std::size_t z_samples, std::uint64_t seed)
{
    if (pair_count < 1)
        throw std::invalid_argument("nonexpansivity_check needs pair_count >= 1");
    const std::vector<Vec> zs = z_ball(problem, std::max<std::size_t>(z_samples, 1));
    NonexpansivityResult result{ConditionReport("nonexpansivity"), std::vector<PairSample>(pair_count)};
    parallel::ErrorSlot errors;
    const auto pairs = static_cast<std::ptrdiff_t>(pair_count);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t k = 0; k < pairs; ++k) errors.run([&] {
        const auto i = static_cast<std::uint64_t>(k);
        PairSample& s = result.samples[static_cast<std::size_t>(k)];
        s.x = sample_point(problem.domain(), seed, i, 0);
        s.xp = sample_point(problem.domain(), seed, i, 1);
        s.u = sample_control(problem, seed, i);
        double best = std::numeric_limits<double>::infinity();
        s.v = select(s.u, problem.control_count(), [&](std::size_t v) {
            const double g = g_function(problem, s.x, s.xp, s.u, v);
            const double pt = psi_tilde(problem, s.x, s.xp, s.u, v, zs);
            const double worst = std::max(g, pt);
            if (worst < best) {
                best = worst;
                s.g = g;
                s.psi_tilde = pt;
            }
            if (g <= kCheckTol && pt <= kCheckTol) {
                s.g = g;
                s.psi_tilde = pt;
                return true;
            }
            return false;
        });
    });
    errors.rethrow();

    double worst = -std::numeric_limits<double>::infinity();
    double worst_g = worst, worst_psi = worst;
    std::string witness;
    std::size_t failures = 0;
    for (const PairSample& s : result.samples) {
        const double score = std::max(s.g, s.psi_tilde);
        if (!s.v)
            ++failures;
        if (score > worst) {
            worst = score;
            witness = "x = " + format_point(s.x) + ", x' = " + format_point(s.xp) + ", u = " + std::to_string(s.u) +
                      (s.v ? ", v = " + std::to_string(*s.v) : ", no admissible v");
        }
        worst_g = std::max(worst_g, s.g);
        worst_psi = std::max(worst_psi, s.psi_tilde);
    }
    ConditionReport& report = result.report;
    report.require("best_v_score", worst, kCheckTol, witness);
    report.record(Check{"g_at_selected", worst_g, kCheckTol, worst_g <= kCheckTol, {}});
    report.record(Check{"psi_tilde_at_selected", worst_psi, kCheckTol, worst_psi <= kCheckTol, {}});
    report.record(Check{"triples_without_v", static_cast<double>(failures), 0.0, failures == 0, {}});
    if (!problem.split())
        report.flag("cost difference checked on " + std::to_string(zs.size()) + " z samples in a ball of radius " +
                    std::to_string(10.0 * std::max(problem.constants().lip_Kz, 1.0)));
    return result;
}

FeedbackSelector FeedbackSelector::build(const ControlProblem& problem, int resolution, double slack,
                                         std::size_t z_samples)
{
    if (resolution < 2)
        throw std::invalid_argument("selector lattice needs at least 2 nodes per axis");
    if (problem.control_count() > 255)
        throw std::invalid_argument("selector supports at most 255 controls");
    FeedbackSelector sel;
    sel.dim_ = problem.state_dim();
    sel.resolution_ = resolution;
    sel.controls_ = problem.control_count();
    sel.slack_ = slack;
    sel.lower_ = problem.domain().lower();
    sel.spacing_ = (problem.domain().upper() - sel.lower_) / (resolution - 1);
    sel.states_ = 1;
    for (int i = 0; i < sel.dim_; ++i)
        sel.states_ *= static_cast<std::size_t>(resolution);
    if (sel.states_ * sel.states_ * sel.controls_ > 50'000'000)
        throw std::invalid_argument("selector lattice too large");

    std::vector<Vec> points(sel.states_);
    for (std::size_t i = 0; i < sel.states_; ++i) {
        Vec x(sel.dim_);
        std::size_t rest = i;
        for (int a = 0; a < sel.dim_; ++a) {
            x[a] = sel.lower_[a] + static_cast<double>(rest % static_cast<std::size_t>(resolution)) * sel.spacing_[a];
            rest /= static_cast<std::size_t>(resolution);
        }
        points[i] = problem.domain().project(x);
    }
    const std::vector<Vec> zs = z_ball(problem, std::max<std::size_t>(z_samples, 1));
    sel.table_.assign(sel.states_ * sel.states_ * sel.controls_, 0);
    std::vector<double> row_g(sel.states_, -std::numeric_limits<double>::infinity());
    std::vector<double> row_psi(sel.states_, -std::numeric_limits<double>::infinity());
    parallel::ErrorSlot errors;
    const auto states = static_cast<std::ptrdiff_t>(sel.states_);
#pragma omp parallel for schedule(dynamic, 4)
    for (std::ptrdiff_t ix = 0; ix < states; ++ix) errors.run([&] {
        const auto i = static_cast<std::size_t>(ix);
        for (std::size_t j = 0; j < sel.states_; ++j)
            for (std::size_t u = 0; u < sel.controls_; ++u) {
                double g = 0.0, pt = 0.0;
                const auto v = select(u, sel.controls_, [&](std::size_t cand) {
                    g = g_function(problem, points[i], points[j], u, cand);
                    if (g > slack)
                        return false;
                    pt = psi_tilde(problem, points[i], points[j], u, cand, zs);
                    return pt <= slack;
                });
                if (!v)
                    throw SelectorError("no control satisfies the nonexpansivity inequalities at x = " +
                                            format_point(points[i]) + ", x' = " + format_point(points[j]) +
                                            ", u = " + std::to_string(u),
                                        points[i], points[j], u);
                sel.table_[(i * sel.states_ + j) * sel.controls_ + u] = static_cast<std::uint8_t>(*v);
                row_g[i] = std::max(row_g[i], g);
                row_psi[i] = std::max(row_psi[i], pt);
            }
    });
    errors.rethrow();
    sel.max_g_ = *std::max_element(row_g.begin(), row_g.end());
    sel.max_psi_tilde_ = *std::max_element(row_psi.begin(), row_psi.end());
    return sel;
}

std::size_t FeedbackSelector::lattice_index(const Vec& x) const
{
    std::size_t flat = 0, stride = 1;
    for (int a = 0; a < dim_; ++a) {
        const double r = spacing_[a] > 0.0 ? std::round((x[a] - lower_[a]) / spacing_[a]) : 0.0;
        const auto k = static_cast<std::size_t>(std::clamp(r, 0.0, static_cast<double>(resolution_ - 1)));
        flat += k * stride;
        stride *= static_cast<std::size_t>(resolution_);
    }
    return flat;
}

std::size_t FeedbackSelector::operator()(const Vec& x, const Vec& xp, std::size_t u) const
{
    if (u >= controls_)
        throw std::out_of_range("selector: control index out of range");
    return table_[(lattice_index(x) * states_ + lattice_index(xp)) * controls_ + u];
}

double FeedbackSelector::switched_fraction() const
{
    std::size_t switched = 0;
    for (std::size_t k = 0; k < table_.size(); ++k)
        if (table_[k] != k % controls_)
            ++switched;
    return static_cast<double>(switched) / static_cast<double>(table_.size());
}

const Vec& GirsanovWeight::gamma(std::size_t step) const
{
    return pieces[std::min(step / steps_per_piece, pieces.size() - 1)];
}

double GirsanovWeight::step_factor(std::size_t step, const Vec& dw, double dt) const
{
    const Vec& g = gamma(step);
    return std::exp(g.dot(dw) - 0.5 * g.squaredNorm() * dt);
}

GirsanovWeight draw_gamma(std::uint64_t seed, std::size_t index, int noise_dim, double k_z, std::size_t piece_count,
                          std::size_t steps_per_piece)
{
    if (piece_count < 1 || steps_per_piece < 1)
        throw std::invalid_argument("gamma needs at least one piece of at least one step");
    GirsanovWeight w;
    w.steps_per_piece = steps_per_piece;
    w.pieces.assign(piece_count, Vec::Zero(noise_dim));
    if (index == 0 || k_z == 0.0)
        return w;
    for (std::size_t q = 0; q < piece_count; ++q) {
        Vec dir(noise_dim);
        rng::normals(seed, rng::Stream::gamma, index, q, {dir.data(), static_cast<std::size_t>(noise_dim)});
        const double norm = dir.norm();
        if (norm == 0.0)
            continue;
        const double r = k_z * std::pow(rng::uniform(seed, rng::Stream::gamma, index | (1ULL << 40), q),
                                        1.0 / noise_dim);
        w.pieces[q] = dir * (r / norm);
    }
    return w;
}

ConditionReport stochastic_nonexpansivity_pair(const ControlProblem& problem, const FeedbackSelector& selector,
                                               const Vec& x, const Vec& xp, std::size_t u, const ProbeConfig& config)
{
    if (!(config.lambda > 0.0) || !(config.epsilon > 0.0))
        throw std::invalid_argument("probe needs lambda > 0 and epsilon > 0");
    if (config.path_count < 2 || config.gamma_count < 1)
        throw std::invalid_argument("probe needs path_count >= 2 and gamma_count >= 1");
    const auto& c = problem.constants();
    const int d = problem.noise_dim();
    const double lambda = config.lambda;
    const double diam = (problem.domain().upper() - problem.domain().lower()).norm();
    // Bound on the integrand of (ii) beyond the horizon.
    const double tail_scale = 2.0 * c.bound_M + c.nonexp_c0 * diam;
    const double horizon = bsde::truncation_horizon(std::max(tail_scale, 1e-12), lambda, config.epsilon / 10.0, 2.0);
    const std::vector<double> grid = sde::uniform_grid(horizon, config.dt);
    const std::size_t steps = grid.size() - 1;
    const double dt = grid[1] - grid[0];
    const double resync_dt = config.resync_dt > 0.0 ? config.resync_dt : 10.0 * config.dt;
    const auto resync = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(resync_dt / dt)));
    const std::size_t probes = steps / resync + 1;
    const std::size_t gammas = c.lip_Kz > 0.0 ? config.gamma_count : 1;

    std::vector<GirsanovWeight> weights;
    for (std::size_t j = 0; j < gammas; ++j)
        weights.push_back(draw_gamma(config.seed, j, d, c.lip_Kz, probes, resync));

    // Z of the BSDE from (x, u); zero when psi ignores z.
    std::optional<bsde::BackwardResult> backward;
    if (c.lip_Kz > 0.0) {
        bsde::SchemeConfig scheme;
        scheme.dt = config.dt;
        scheme.path_count = config.path_count;
        scheme.seed = config.seed;
        scheme.degree = config.degree;
        scheme.keep_z_models = true;
        const bsde::DriverFn driver = [&problem](const Vec& s, const Vec& z, std::size_t a) {
            return problem.cost(s, z, a);
        };
        backward = bsde::solve_backward(problem, x, sde::constant_policy(u), lambda, horizon, driver,
                                        [](const Vec&, const Vec&) { return 0.0; }, scheme);
    }

    const std::size_t paths = config.path_count;
    // Per path, per gamma: weighted squared distance and density at each probe, discounted cost gap.
    std::vector<double> distance(paths * gammas * probes), density(paths * gammas * probes);
    std::vector<double> cost_gap(paths * gammas, 0.0);
    parallel::ErrorSlot errors;
    const auto path_total = static_cast<std::ptrdiff_t>(paths);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t pi = 0; pi < path_total; ++pi) errors.run([&] {
        const auto p = static_cast<std::size_t>(pi);
        Vec a = x, b = xp, w = Vec::Zero(d);
        std::vector<double> l(gammas, 1.0);
        std::size_t v = selector(a, b, u);
        for (std::size_t k = 0; k <= steps; ++k) {
            if (k % resync == 0) {
                v = selector(a, b, u);
                const double sq = (a - b).squaredNorm();
                for (std::size_t j = 0; j < gammas; ++j) {
                    const std::size_t slot = (p * gammas + j) * probes + k / resync;
                    distance[slot] = l[j] * sq;
                    density[slot] = l[j];
                }
            }
            if (k == steps)
                break;
            const Vec z = backward ? backward->z_at(k, a, w) : Vec::Zero(d);
            const double gap = std::abs(problem.cost(a, z, u) - problem.cost(b, z, v));
            const double discount = lambda * std::exp(-lambda * grid[k]) * dt;
            for (std::size_t j = 0; j < gammas; ++j)
                cost_gap[p * gammas + j] += discount * l[j] * gap;
            const Vec dw = sde::brownian_increment(config.seed, p, k, d, dt);
            a = problem.domain().project(sde::euler_step(problem, a, u, dt, dw));
            b = problem.domain().project(sde::euler_step(problem, b, v, dt, dw));
            w += dw;
            for (std::size_t j = 0; j < gammas; ++j)
                l[j] *= weights[j].step_factor(k, dw, dt);
        }
    });
    errors.rethrow();

    const double dist0 = (x - xp).norm();
    const double rhs_i = (dist0 + config.epsilon) * (dist0 + config.epsilon);
    const double rhs_ii = c.nonexp_c0 * dist0 + config.epsilon;
    const double tail = tail_scale * std::exp(-lambda * horizon);
    double worst_i = -std::numeric_limits<double>::infinity(), worst_ii = worst_i, worst_z = 0.0;
    std::string witness_i, witness_ii, witness_z;
    std::vector<double> column(paths);
    for (std::size_t j = 0; j < gammas; ++j) {
        for (std::size_t q = 0; q < probes; ++q) {
            for (std::size_t p = 0; p < paths; ++p)
                column[p] = distance[(p * gammas + j) * probes + q];
            const Stats s = ordered_stats(column);
            const double t = grid[std::min(q * resync, steps)];
            if (s.mean - 3.0 * s.se > worst_i) {
                worst_i = s.mean - 3.0 * s.se;
                witness_i = "gamma " + std::to_string(j) + ", t = " + std::to_string(t);
            }
            for (std::size_t p = 0; p < paths; ++p)
                column[p] = density[(p * gammas + j) * probes + q];
            const Stats ls = ordered_stats(column);
            const double zscore = ls.se > 0.0 ? std::abs(ls.mean - 1.0) / ls.se
                                              : (std::abs(ls.mean - 1.0) > 1e-12 ? 1e300 : 0.0);
            if (zscore > worst_z) {
                worst_z = zscore;
                witness_z = "gamma " + std::to_string(j) + ", t = " + std::to_string(t);
            }
        }
        for (std::size_t p = 0; p < paths; ++p)
            column[p] = cost_gap[p * gammas + j];
        const Stats s = ordered_stats(column);
        if (s.mean + tail - 3.0 * s.se > worst_ii) {
            worst_ii = s.mean + tail - 3.0 * s.se;
            witness_ii = "gamma " + std::to_string(j);
        }
    }
    ConditionReport report("stochastic nonexpansivity at x = " + format_point(x) + ", x' = " + format_point(xp) +
                           ", u = " + std::to_string(u));
    report.require("weighted_distance_sq", worst_i, rhs_i, witness_i);
    report.require("weighted_cost_gap", worst_ii, rhs_ii, witness_ii);
    // A heavy-tailed density makes the weighted estimates noisy; surfaced, not failed.
    if (worst_z > 4.0)
        report.flag("density mean deviates from 1 by " + std::to_string(worst_z) + " standard errors at " +
                    witness_z);
    return report;
}

ConditionReport stochastic_nonexpansivity_probe(const ControlProblem& problem, const FeedbackSelector& selector,
                                                const ProbeConfig& config)
{
    ConditionReport report("stochastic nonexpansivity");
    for (std::size_t k = 0; k < config.pair_count; ++k) {
        const Vec x = sample_point(problem.domain(), config.seed, k, 10);
        const Vec xp = sample_point(problem.domain(), config.seed, k, 11);
        const std::size_t u = sample_control(problem, config.seed, k);
        ProbeConfig pair = config;
        pair.seed = config.seed + 7919 * (k + 1);
        const ConditionReport r = stochastic_nonexpansivity_pair(problem, selector, x, xp, u, pair);
        report.merge(r, "pair" + std::to_string(k) + ".");
    }
    return report;
}

}  // namespace vandisc::conditions
