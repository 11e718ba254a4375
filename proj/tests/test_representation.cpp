#include "vandisc/representation.hpp"

#include <doctest.h>

#include <cmath>

using namespace vandisc;
using model::builtin_problem;

namespace {

representation::MonteCarloConfig mc(double dt, std::size_t paths, std::uint64_t seed = 1)
{
    representation::MonteCarloConfig c;
    c.dt = dt;
    c.path_count = paths;
    c.seed = seed;
    return c;
}

}  // namespace

TEST_CASE("policy family lists constants then feedback")
{
    const auto p = builtin_problem("split_homogeneous");
    CHECK(representation::policy_family(p).size() == 3);
    const auto f = hjb::solve_discounted(p, 1.0, hjb::Grid::over(p.domain(), 21));
    const auto family = representation::policy_family(p, &f);
    REQUIRE(family.size() == 4);
    CHECK(family.back().name == "feedback");
    CHECK(family[1].policy(0.0, vec_of({0.3})) == 1);
}

TEST_CASE("dpp residual vanishes for constant cost and at t = 0")
{
    const auto p = builtin_problem("constant_cost");
    const auto f = hjb::solve_discounted(p, 0.5, hjb::Grid::over(p.domain(), 21));
    const auto family = representation::policy_family(p, &f);
    for (double t : {0.0, 0.25, 0.5, 0.75}) {
        const auto r = representation::dpp_residual(p, f, t, family, mc(0.01, 20));
        CHECK(r.passed());
        CHECK(r.find("dpp_residual")->measured <= 1e-12);
    }
    const auto d = builtin_problem("decay_quadratic");
    const auto fd = hjb::solve_discounted(d, 1.0, hjb::Grid::over(d.domain(), 41));
    const auto r0 = representation::dpp_residual(d, fd, 0.0, representation::policy_family(d, &fd), mc(0.01, 10));
    CHECK(r0.find("dpp_residual")->measured <= 1e-15);
    CHECK_THROWS_AS(representation::dpp_residual(d, fd, 0.5, {}, mc(0.01, 10)), std::invalid_argument);
}

TEST_CASE("dpp residual on decay quadratic")
{
    const auto p = builtin_problem("decay_quadratic");
    const auto f = hjb::solve_discounted(p, 1.0, hjb::Grid::over(p.domain(), 101));
    const auto family = representation::policy_family(p, &f);
    for (double t : {0.25, 0.5}) {
        const auto r = representation::dpp_residual(p, f, t, family, mc(0.01, 32), 5);
        CHECK(r.passed());
        // The field is O(h) accurate, far inside the tolerance.
        CHECK(r.find("dpp_residual")->measured < 0.05);
    }
}

TEST_CASE("representation value special cases")
{
    const auto p = builtin_problem("decay_quadratic");
    const auto family = representation::policy_family(p);
    const auto only_zero = representation::representation_value(p, vec_of({0.8}), {0.0}, family, mc(0.02, 10));
    CHECK(only_zero.value == doctest::Approx(0.64).epsilon(1e-15));
    CHECK(only_zero.argmin_t == 0.0);

    const double t_max = representation::default_t_max(p);
    CHECK(t_max == doctest::Approx(6.0).epsilon(0.02));
    const auto grid = representation::t_grid(6.0, 13);
    REQUIRE(grid.size() == 13);
    CHECK(grid.back() == 6.0);
    const auto r = representation::representation_value(p, vec_of({0.8}), grid, family, mc(0.02, 10));
    // Euler flow of x' = -x: 0.8 * 0.98^(t / 0.02).
    CHECK(r.value == doctest::Approx(0.64 * std::pow(0.98, 600)).epsilon(1e-9));
    CHECK(r.argmin_t == 6.0);
    CHECK(r.policy_name == "constant 1");
    CHECK(r.tail_allowance > 0.0);
    CHECK(r.tail_note.find("T_max = 6") != std::string::npos);
    CHECK(r.value <= only_zero.value);

    // A larger inf family never raises the value.
    const auto coarse = representation::representation_value(p, vec_of({0.8}), representation::t_grid(6.0, 4), family,
                                                             mc(0.02, 10));
    CHECK(r.value <= coarse.value);

    CHECK_THROWS_AS(representation::effective_split(builtin_problem("example_2_3")), std::invalid_argument);
    CHECK_THROWS_AS(representation::representation_value(p, vec_of({0.8}), {0.5, 1.0}, family, mc(0.02, 10)),
                    std::invalid_argument);
}

TEST_CASE("zero driver reduces to the plain expectation")
{
    const auto p = builtin_problem("elliptic_counterexample");
    const auto family = representation::policy_family(p);
    const double dt = 0.02;
    const std::size_t paths = 400;
    const auto r = representation::representation_value(p, vec_of({0.5}), {0.0, 0.5, 1.0}, family, mc(dt, paths, 3));
    for (const auto& cell : r.cells) {
        if (cell.t == 0.0)
            continue;
        const auto grid = sde::uniform_grid(cell.t, dt);
        double sum = 0.0;
        for (std::size_t k = 0; k < paths; ++k) {
            const auto path = sde::simulate(p, vec_of({0.5}), sde::constant_policy(0), grid, 3, k);
            sum += std::pow(path.states.back()[0], 2);
        }
        CHECK(cell.value == doctest::Approx(sum / paths).epsilon(1e-12));
    }
}

TEST_CASE("representation crosscheck at desk scale")
{
    for (const char* name : {"decay_quadratic", "split_homogeneous", "constant_cost"}) {
        const auto p = builtin_problem(name);
        const auto g = hjb::Grid::over(p.domain(), 101);
        const auto sweep = limit::lambda_sweep(p, g, {0.5, 0.25, 0.125, 0.0625});
        const auto grid = representation::t_grid(representation::default_t_max(p), 7);
        const auto report = representation::representation_crosscheck(sweep, p, 3, grid, mc(0.05, 20));
        CHECK_MESSAGE(report.passed(), name);
    }
}

TEST_CASE("generalized upper bound")
{
    const auto split = builtin_problem("split_homogeneous");
    const auto rec = representation::recession_fn(split);
    CHECK(rec(vec_of({-2.0}), 0) == -2.0);

    const auto soft = builtin_problem("decay_softabs");
    const auto soft_rec = representation::recession_fn(soft);
    CHECK(soft_rec(vec_of({0.7}), 0) == doctest::Approx(0.7).epsilon(1e-4));

    for (const auto* p : {&split, &soft}) {
        const auto g = hjb::Grid::over(p->domain(), 101);
        const auto sweep = limit::lambda_sweep(*p, g, {0.5, 0.25, 0.125});
        const auto report = representation::generalized_upper_bound(
            sweep, *p, representation::recession_fn(*p), 3, representation::t_grid(4.0, 5), mc(0.05, 20));
        CHECK(report.passed());
    }
}

TEST_CASE("sample nodes spread over the active set")
{
    const auto p = builtin_problem("decay_quadratic");
    const auto g = hjb::Grid::over(p.domain(), 101);
    const auto nodes = representation::sample_nodes(g, 9);
    REQUIRE(nodes.size() == 9);
    CHECK(nodes.front() == 0);
    CHECK(nodes.back() == 100);
    CHECK(nodes[4] == 50);
}
