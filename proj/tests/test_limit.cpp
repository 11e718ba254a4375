#include "vandisc/limit.hpp"

#include <doctest.h>

#include <cmath>

using namespace vandisc;
using model::builtin_problem;

namespace {

hjb::Grid grid_for(const model::ControlProblem& p, int n) { return hjb::Grid::over(p.domain(), n); }

const std::vector<double> kCriterionLambdas{1, 0.5, 0.25, 0.125, 0.0625, 0.03125};

}  // namespace

TEST_CASE("constant cost sweep is flat")
{
    const auto p = builtin_problem("constant_cost");
    const auto s = limit::lambda_sweep(p, grid_for(p, 41), {1, 0.1, 0.01});
    REQUIRE(s.fields.size() == 3);
    REQUIRE(s.sup_gaps.size() == 2);
    for (double gap : s.sup_gaps)
        CHECK(gap < 1e-12);
    for (double v : s.w0.values)
        CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(limit::monotonicity_check(s).passed());
    CHECK(limit::pointwise_cost_bound(s, p).passed());
    CHECK(limit::subsolution_residual(s, p, 1e-9).passed());
    const auto constancy = limit::constancy_check(s, p);
    CHECK(constancy.not_applicable());
}

TEST_CASE("decay quadratic sweep converges to zero")
{
    const auto p = builtin_problem("decay_quadratic");
    const auto g = grid_for(p, 201);
    const double h = g.spacing()[0];
    const auto s = limit::lambda_sweep(p, g, {1, 0.25, 0.0625, 0.015625});
    for (std::size_t i = 0; i < g.size(); ++i)
        CHECK(std::abs(s.w0.values[i]) <= 0.015625 / 2 + 5 * h * 0.015625);
    for (std::size_t k = 1; k < s.sup_gaps.size(); ++k)
        CHECK(s.sup_gaps[k] < s.sup_gaps[k - 1]);
    CHECK(limit::monotonicity_check(s).passed());
    CHECK(s.monotone_violation <= 2 * s.solver_tol);
    CHECK(limit::pointwise_cost_bound(s, p).passed());
    const auto residual = limit::subsolution_residual(s, p, 10 * h);
    CHECK(residual.passed());
    CHECK(limit::constancy_check(s, p).not_applicable());

    const auto r = limit::lambda_sweep(p, g, {1, 0.25, 0.0625, 0.015625}, {}, true);
    CHECK(r.extrapolated);
    double worst = 0.0;
    for (double v : r.w0.values)
        worst = std::max(worst, std::abs(v));
    double plain = 0.0;
    for (double v : s.w0.values)
        plain = std::max(plain, std::abs(v));
    CHECK(worst < plain);
}

TEST_CASE("sweep preconditions")
{
    const auto p = builtin_problem("constant_cost");
    const auto g = grid_for(p, 11);
    CHECK_THROWS_AS(limit::lambda_sweep(p, g, {1, 0.1}), std::invalid_argument);
    CHECK_THROWS_AS(limit::lambda_sweep(p, g, {1, 0.1, 0.2}), std::invalid_argument);
    CHECK_THROWS_AS(limit::lambda_sweep(p, g, {1, 0.1, -0.1}), std::invalid_argument);
    hjb::SolverConfig cfg;
    cfg.max_iter = 1;
    const auto q = builtin_problem("decay_quadratic");
    try {
        limit::lambda_sweep(q, grid_for(q, 51), {1, 0.5, 0.25}, cfg);
        FAIL("expected SweepError");
    } catch (const limit::SweepError& e) {
        CHECK(e.lambda() == 1.0);
    }
}

TEST_CASE("radial monotonicity across the catalog")
{
    const auto l_grid = hjb::default_l_grid();
    for (const char* name : {"split_homogeneous", "constant_cost", "controllable"})
        CHECK_MESSAGE(limit::radial_monotonicity_check(builtin_problem(name), 200, l_grid, 3).passed(), name);
    const auto elliptic = limit::radial_monotonicity_check(builtin_problem("elliptic_counterexample"), 200, l_grid, 3);
    CHECK_FALSE(elliptic.passed());
    CHECK(elliptic.find("h_above_h00")->measured > 0.0);
    CHECK_FALSE(elliptic.find("h_above_h00")->witness.empty());
    // Both controls drive toward the origin, so -p.b can be negative for every u.
    CHECK_FALSE(limit::radial_monotonicity_check(builtin_problem("decay_quadratic"), 200, l_grid, 3).passed());
}

TEST_CASE("monotone sweeps on radially monotone problems")
{
    for (const char* name : {"constant_cost", "split_homogeneous", "controllable"}) {
        const auto p = builtin_problem(name);
        const auto s = limit::lambda_sweep(p, grid_for(p, 201), kCriterionLambdas);
        CHECK_MESSAGE(limit::monotonicity_check(s).passed(), name);
        CHECK_MESSAGE(limit::pointwise_cost_bound(s, p).passed(), name);
    }
}

TEST_CASE("controllable problem has constant limit")
{
    const auto p = builtin_problem("controllable");
    const auto g = grid_for(p, 201);
    const auto s = limit::lambda_sweep(p, g, kCriterionLambdas);
    const auto report = limit::constancy_check(s, p);
    CHECK_FALSE(report.not_applicable());
    CHECK(report.passed());
    // Steering to the boundary drives the cost to zero.
    for (double v : s.w0.values)
        CHECK(v < 0.05);
}

TEST_CASE("violating radial monotonicity is recorded, not asserted")
{
    const auto p = model::parse_problem(R"(name = concave_z
dimension = 1
noise_dimension = 1
[dynamics]
b1 = -x1
sigma11 = 0.5*(1 - x1^2)
[cost]
psi = x1^2 - abs(z1)
[domain]
type = box
lower = -1
upper = 1
[constants]
M = 1
K_x = 2
K_z = 1
c = 1
c0 = 2
M0 = 2
[controls]
values = 0
)");
    CHECK_FALSE(limit::radial_monotonicity_check(p, 100, hjb::default_l_grid(), 1).passed());
    const auto s = limit::lambda_sweep(p, grid_for(p, 101), {1, 0.5, 0.25});
    const auto report = limit::monotonicity_check(s);
    REQUIRE(report.find("monotone_violation") != nullptr);
    CHECK(std::isfinite(report.find("monotone_violation")->measured));
}

TEST_CASE("recession driver limits")
{
    const std::vector<double> lambdas{1, 0.1, 0.01, 0.001};
    const auto split = builtin_problem("split_homogeneous");
    for (double z : {-2.0, 0.5, 3.0}) {
        const auto r = limit::recession_driver(split, vec_of({z}), 1, lambdas);
        CHECK(r.value == doctest::Approx(-std::abs(z)).epsilon(1e-12));
        CHECK(r.converged);
        CHECK(r.spreads.back() < r.spreads.front());
    }
    const auto decay = builtin_problem("decay_quadratic");
    const auto flat = limit::recession_driver(decay, vec_of({1.5}), 0, lambdas);
    CHECK(std::abs(flat.value) < 1e-12);

    const auto soft = builtin_problem("decay_softabs");
    const auto r = limit::recession_driver(soft, vec_of({0.7}), 0, lambdas);
    // Richardson leaves an O(lambda^2 / |z|) error.
    CHECK(r.value == doctest::Approx(0.7).epsilon(1e-4));
    CHECK(r.converged);
    for (std::size_t k = 0; k < lambdas.size(); ++k) {
        const double expected = std::sqrt(lambdas[k] * lambdas[k] + 0.49) - lambdas[k];
        CHECK(r.sequences[0][k] - lambdas[k] * std::pow(r.xs[0][0], 2) ==
              doctest::Approx(expected).epsilon(1e-12));
    }
    CHECK_THROWS_AS(limit::recession_driver(soft, vec_of({0.7}), 0, {0.1, 1.0}), std::invalid_argument);
}

TEST_CASE("pointwise cost bound on split homogeneous")
{
    const auto p = builtin_problem("split_homogeneous");
    const auto g = grid_for(p, 101);
    const auto s = limit::lambda_sweep(p, g, {1, 0.25, 0.0625});
    const auto report = limit::pointwise_cost_bound(s, p);
    CHECK(report.passed());
    CHECK(report.find("w0_minus_min_cost")->measured <= 1e-9);
}

TEST_CASE("discrete derivatives of a quadratic")
{
    const auto p = builtin_problem("decay_quadratic");
    const auto g = grid_for(p, 21);
    std::vector<double> v(g.size());
    for (std::size_t i = 0; i < g.size(); ++i)
        v[i] = 3 * std::pow(g.point(i)[0], 2) + g.point(i)[0];
    Vec d;
    Mat a;
    REQUIRE(limit::discrete_derivatives(g, v, 15, d, a));
    CHECK(d[0] == doctest::Approx(6 * g.point(15)[0] + 1).epsilon(1e-12));
    CHECK(a(0, 0) == doctest::Approx(6.0).epsilon(1e-9));
    CHECK_FALSE(limit::discrete_derivatives(g, v, 0, d, a));
}
