#include "vandisc/bsde.hpp"

#include <doctest.h>

#include <cmath>

using namespace vandisc;
using model::builtin_problem;

namespace {

bsde::SchemeConfig scheme(double dt, std::size_t paths, std::uint64_t seed = 1)
{
    bsde::SchemeConfig c;
    c.dt = dt;
    c.path_count = paths;
    c.seed = seed;
    return c;
}

}  // namespace

TEST_CASE("constant cost finite horizon matches the linear ODE")
{
    const auto p = builtin_problem("constant_cost");
    const double lambda = 0.5;
    const auto path = bsde::solve_finite_horizon(p, vec_of({0.0}), sde::constant_policy(0), lambda, 40.0,
                                                 scheme(0.01, 1));
    CHECK(path.y_values[0] == doctest::Approx((1 - std::exp(-20.0)) / lambda).epsilon(1e-6));
    for (const Vec& z : path.z_values)
        CHECK(z[0] == 0.0);
    // Discrete solution in closed form: (1 - (1 + lambda dt)^-K) / lambda.
    CHECK(path.y_values[0] == doctest::Approx((1 - std::pow(1 + lambda * 0.01, -4000.0)) / lambda).epsilon(1e-13));
}

TEST_CASE("zero cost gives zero solution")
{
    const auto e = builtin_problem("example_2_3");
    // psi(x, 0, u) = 0 and Z starts from a zero terminal: Y vanishes.
    const auto path = bsde::solve_finite_horizon(e, vec_of({0.5}), sde::constant_policy(0), 1.0, 3.0, scheme(0.01, 2000));
    for (double y : path.y_values)
        CHECK(y == 0.0);
    for (const Vec& z : path.z_values)
        CHECK(z[0] == 0.0);
    const auto inf = bsde::solve_infinite_horizon(e, vec_of({0.5}), sde::constant_policy(0), 1.0, 1e-9, 1.0,
                                                  scheme(0.01, 500));
    CHECK(inf.y_values[0] == 0.0);
    CHECK(inf.tail_error_bound == 0.0);
}

TEST_CASE("truncation horizon formula")
{
    CHECK(bsde::truncation_horizon(1.0, 0.5, 1e-6, 1.0) == doctest::Approx(1.0 + 2.0 * std::log(2e6)));
    CHECK(bsde::truncation_horizon(1.0, 0.5, 1e-6, 1.0) == doctest::Approx(30.0).epsilon(1e-3));
    CHECK(bsde::truncation_horizon(0.0, 0.5, 1e-6, 1.0) == 1.0);
    CHECK_THROWS(bsde::truncation_horizon(1.0, 0.01, 1e-305, 0.0));
    CHECK_THROWS(bsde::truncation_horizon(1.0, 0.5, 0.0, 1.0));
}

TEST_CASE("infinite horizon constant cost")
{
    const auto p = builtin_problem("constant_cost");
    const auto path = bsde::solve_infinite_horizon(p, vec_of({0.0}), sde::constant_policy(0), 0.5, 1e-6, 1.0,
                                                   scheme(0.01, 1));
    CHECK(path.tail_error_bound <= 1e-6);
    CHECK(path.time_grid.back() == doctest::Approx(1.0));
    CHECK(path.truncation_horizon >= 1.0 + 2.0 * std::log(2e6));
    // Backward Euler shifts the value by O(dt) from 2.
    CHECK(path.y_values[0] == doctest::Approx(2.0).epsilon(1e-5));
    CHECK(bsde::y_bound_check(path, p).passed());
}

TEST_CASE("y bound check fails on a corrupted path")
{
    const auto p = builtin_problem("constant_cost");
    auto path = bsde::solve_infinite_horizon(p, vec_of({0.0}), sde::constant_policy(0), 0.5, 1e-6, 1.0,
                                             scheme(0.05, 1));
    path.y_values[0] = 3.0;
    path.tail_error_bound = 0.0;
    const auto report = bsde::y_bound_check(path, p);
    CHECK_FALSE(report.passed());
    CHECK(report.find("abs_y")->margin() == doctest::Approx(-1.0));
}

TEST_CASE("discount identity on deterministic dynamics")
{
    const auto p = builtin_problem("decay_quadratic");
    const double lambda = 0.7, x = 0.6, n = 10.0, dt = 1e-3;
    const auto path = bsde::solve_finite_horizon(p, vec_of({x}), sde::constant_policy(1), lambda, n, scheme(dt, 1));
    const double exact = x * x / (lambda + 2) * (1 - std::exp(-(lambda + 2) * n));
    CHECK(std::abs(path.y_values[0] - exact) < 2.0 * dt);
}

TEST_CASE("g-expectation of a constant")
{
    const auto p = builtin_problem("example_2_3");
    const auto r = bsde::g_expectation([](const Vec& z) { return -std::abs(z[0]); },
                                       [](const Vec&, const Vec&) { return 0.7; }, p, vec_of({0.5}),
                                       sde::constant_policy(0), 1.0, scheme(0.02, 2000));
    CHECK(r.value == 0.7);
    CHECK(r.z0[0] == 0.0);
}

TEST_CASE("zero driver reduces to the sample mean")
{
    const auto p = builtin_problem("example_2_3");
    auto cfg = scheme(0.02, 5000);
    const auto r = bsde::g_expectation([](const Vec&) { return 0.0; },
                                       [](const Vec& x, const Vec&) { return x[0] * x[0]; }, p, vec_of({0.5}),
                                       sde::constant_policy(0), 1.0, cfg);
    const auto grid = sde::uniform_grid(1.0, cfg.dt);
    double sum = 0.0;
    for (std::size_t i = 0; i < cfg.path_count; ++i) {
        const double x = sde::simulate(p, vec_of({0.5}), sde::constant_policy(0), grid, cfg.seed, i).states.back()[0];
        sum += x * x;
    }
    CHECK(r.value == sum / cfg.path_count);
}

TEST_CASE("g-expectation of the Brownian endpoint")
{
    const auto p = builtin_problem("constant_cost");
    auto cfg = scheme(0.05, 20000, 4);
    cfg.regress_on_brownian = true;
    const double K = 1.0, T = 1.0;
    const auto r = bsde::g_expectation([K](const Vec& z) { return -K * std::abs(z[0]); },
                                       [](const Vec&, const Vec& w) { return w[0]; }, p, vec_of({0.0}),
                                       sde::constant_policy(0), T, cfg);
    CHECK(std::abs(r.value + K * T) < 3.0 * r.std_error);
}

TEST_CASE("serial and parallel backward passes agree bitwise")
{
    const auto p = builtin_problem("example_2_3");
    auto cfg = scheme(0.05, 3000, 8);
    cfg.regress_on_brownian = true;
    auto run = [&](bool parallel) {
        cfg.parallel = parallel;
        return bsde::g_expectation([](const Vec& z) { return -std::abs(z[0]); },
                                   [](const Vec& x, const Vec& w) { return x[0] + std::sin(w[0]); }, p, vec_of({0.5}),
                                   sde::constant_policy(0), 1.0, cfg);
    };
    const auto a = run(false);
    const auto b = run(true);
    CHECK(a.value == b.value);
    CHECK(a.samples == b.samples);
}

TEST_CASE("horizon must be positive")
{
    const auto p = builtin_problem("constant_cost");
    CHECK_THROWS_AS(bsde::solve_finite_horizon(p, vec_of({0.0}), sde::constant_policy(0), 0.5, 0.0, scheme(0.1, 1)),
                    std::invalid_argument);
}

TEST_CASE("g-expectation is monotone and concave on common seeds")
{
    const auto p = builtin_problem("example_2_3");
    const auto g = [](const Vec& z) { return -std::abs(z[0]); };
    auto cfg = scheme(0.05, 2000);
    cfg.regress_on_brownian = true;
    auto eval = [&](const bsde::TerminalFn& eta) {
        return bsde::g_expectation(g, eta, p, vec_of({0.5}), sde::constant_policy(0), 1.0, cfg);
    };
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        cfg.seed = seed;
        const bsde::TerminalFn low = [](const Vec& x, const Vec& w) { return x[0] + std::sin(w[0]); };
        const bsde::TerminalFn high = [](const Vec& x, const Vec& w) { return x[0] + std::sin(w[0]) + 0.2 * w[0] * w[0]; };
        const auto a = eval(low);
        const auto b = eval(high);
        CHECK(a.value <= b.value + 3.0 * std::hypot(a.std_error, b.std_error));
        for (double k : {0.25, 0.5, 0.75}) {
            const auto mix = eval([&](const Vec& x, const Vec& w) { return k * low(x, w) + (1 - k) * std::abs(w[0]); });
            const auto other = eval([](const Vec&, const Vec& w) { return std::abs(w[0]); });
            CHECK(mix.value >= k * a.value + (1 - k) * other.value - 3.0 * mix.std_error);
        }
    }
}

TEST_CASE("truncation gap shrinks at the discount rate")
{
    const auto p = builtin_problem("constant_cost");
    const double lambda = 0.5, T = 1.0, dt = 0.01;
    auto y_upto_T = [&](double m) {
        const auto path = bsde::solve_finite_horizon(p, vec_of({0.0}), sde::constant_policy(0), lambda, m, scheme(dt, 1));
        return std::vector<double>(path.y_values.begin(), path.y_values.begin() + 101);
    };
    const auto ref = y_upto_T(T + 40.0);
    auto gap = [&](double extra) {
        const auto y = y_upto_T(T + extra);
        double worst = 0.0;
        for (std::size_t k = 0; k < y.size(); ++k)
            worst = std::max(worst, std::abs(y[k] - ref[k]));
        return worst;
    };
    for (double extra : {1.0, 2.0, 4.0}) {
        const double g1 = gap(extra);
        // Backward Euler discounts by (1 + lambda dt)^-K, slightly above e^{-lambda K dt}.
        CHECK(g1 <= 1.0 / lambda * std::pow(1.0 + lambda * dt, -extra / dt));
        CHECK(g1 / gap(2 * extra) >= std::exp(lambda * extra) / 2);
    }
}
