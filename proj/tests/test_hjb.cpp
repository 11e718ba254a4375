#include "vandisc/bsde.hpp"
#include "vandisc/hjb.hpp"
#include "vandisc/rng.hpp"

#include <doctest.h>

#include <cmath>

using namespace vandisc;
using model::builtin_problem;

namespace {

const char* kCorrelated2d = R"(name = correlated
dimension = 2
noise_dimension = 1
[dynamics]
b1 = -x1
b2 = -x2
sigma11 = 0.2
sigma21 = 0.4
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
values = 0
)";

const char* kBall2d = R"(name = ball
dimension = 2
noise_dimension = 2
[dynamics]
b1 = -x1
b2 = -x2
sigma11 = 0.3*(1 - x1^2 - x2^2)
sigma22 = 0.3*(1 - x1^2 - x2^2)
[cost]
psi = x1^2 + u1*x2^2
[domain]
type = ball
center = 0, 0
radius = 1
[constants]
M = 2
K_x = 4
K_z = 0
c = 2
c0 = 4
M0 = 4
[controls]
values = 1; 2
)";

double closed_form_decay(double lambda, double x) { return lambda * x * x / (lambda + 2.0); }

}  // namespace

TEST_CASE("hamiltonian evaluates the bracket maximum")
{
    const auto p = builtin_problem("decay_quadratic");
    const auto probe = hjb::hamiltonian(p, vec_of({0.5}), vec_of({1.0}), Mat::Zero(1, 1));
    // max over u in {1/2, 1} of u x p - x^2.
    CHECK(probe.value == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(probe.argmax == 1);

    const auto c = builtin_problem("constant_cost");
    for (double q : {-3.0, 0.0, 5.0})
        CHECK(hjb::hamiltonian(c, vec_of({0.2}), vec_of({q}), Mat::Constant(1, 1, q)).value == -1.0);

    Mat bad(2, 2);
    bad << 1, 2, 0, 1;
    const auto two = model::parse_problem(kCorrelated2d);
    CHECK_THROWS_AS(hjb::hamiltonian(two, vec_of({0, 0}), vec_of({0, 0}), bad), std::invalid_argument);
}

TEST_CASE("hamiltonian is nonincreasing in the matrix argument")
{
    for (const char* name : {"example_2_3", "elliptic_counterexample", "split_homogeneous"}) {
        const auto p = builtin_problem(name);
        for (std::uint64_t k = 0; k < 200; ++k) {
            const double x = 2 * rng::uniform(5, rng::Stream::sampling, k, 0) - 1;
            const double q = 4 * rng::uniform(5, rng::Stream::sampling, k, 1) - 2;
            const double a = 4 * rng::uniform(5, rng::Stream::sampling, k, 2) - 2;
            const double extra = 3 * rng::uniform(5, rng::Stream::sampling, k, 3);
            const double ha = hjb::hamiltonian(p, vec_of({x}), vec_of({q}), Mat::Constant(1, 1, a)).value;
            const double hb = hjb::hamiltonian(p, vec_of({x}), vec_of({q}), Mat::Constant(1, 1, a + extra)).value;
            CHECK(hb <= ha + 1e-14);
        }
    }
}

TEST_CASE("capped and envelope hamiltonians")
{
    const auto p = builtin_problem("decay_quadratic");  // M0 = 2
    CHECK(hjb::capped_hamiltonian(p, vec_of({0.5}), vec_of({1.0}), Mat::Zero(1, 1)) ==
          doctest::Approx(0.25).epsilon(1e-15));
    CHECK(hjb::capped_hamiltonian(p, vec_of({1.0}), vec_of({20.0}), Mat::Zero(1, 1)) == 2.0);
    for (double q : {-5.0, 0.3, 9.0}) {
        const Vec x = vec_of({0.7});
        CHECK(hjb::capped_hamiltonian(p, x, vec_of({q}), Mat::Zero(1, 1)) <=
              hjb::hamiltonian(p, x, vec_of({q}), Mat::Zero(1, 1)).value);
    }

    const auto grid = hjb::default_l_grid();
    REQUIRE(grid.size() == 21);
    CHECK(grid.front() == std::ldexp(1.0, -10));
    CHECK(grid.back() == std::ldexp(1.0, 10));

    const auto zero = hjb::envelope_hamiltonian(p, vec_of({0.4}), vec_of({0.0}), Mat::Zero(1, 1), grid, 2e3);
    CHECK(zero.value == doctest::Approx(std::min(2.0, -0.16)).epsilon(1e-15));
    CHECK_FALSE(zero.diverged);

    hjb::HamiltonianFn norm = [](const Vec&, const Vec& q, const Mat&) { return q.norm(); };
    const auto lin = hjb::envelope_hamiltonian(norm, 2.0, vec_of({0.0}), vec_of({3.0}), Mat::Zero(1, 1), grid, 2e3);
    CHECK(lin.value == 2.0);
    CHECK(lin.diverged);

    // Radially monotone: the maximum sits at l_max and the cap binds.
    const auto mono = hjb::envelope_hamiltonian(p, vec_of({0.5}), vec_of({1.0}), Mat::Zero(1, 1), grid, 4e3);
    CHECK(mono.value == 2.0);
    double prev = -1e300;
    for (double l : grid) {
        const double h = hjb::hamiltonian(p, vec_of({0.5}), vec_of({l}), Mat::Zero(1, 1)).value;
        CHECK(h >= prev);
        prev = h;
    }
    CHECK_THROWS_AS(hjb::envelope_hamiltonian(norm, 1.0, vec_of({0.0}), vec_of({1.0}), Mat::Zero(1, 1), {}, 1.0),
                    std::invalid_argument);
}

TEST_CASE("grid geometry and interpolation")
{
    const auto p = builtin_problem("decay_quadratic");
    const auto g = hjb::Grid::over(p.domain(), 401);
    CHECK(g.size() == 401);
    CHECK(g.spacing()[0] == doctest::Approx(0.005).epsilon(1e-14));
    CHECK(g.point(0)[0] == -1.0);
    CHECK(g.point(400)[0] == 1.0);
    CHECK_FALSE(g.interior(0));
    CHECK(g.interior(200));
    std::vector<double> linear(g.size());
    for (std::size_t i = 0; i < g.size(); ++i)
        linear[i] = 3 * g.point(i)[0] - 1;
    for (double x : {-1.0, -0.3337, 0.0, 0.71, 1.0})
        CHECK(g.interpolate(linear, vec_of({x})) == doctest::Approx(3 * x - 1).epsilon(1e-12));

    const auto ball = model::parse_problem(kBall2d);
    const auto bg = hjb::Grid::over(ball.domain(), 21);
    std::size_t active = 0;
    for (std::size_t i = 0; i < bg.size(); ++i)
        if (bg.active(i)) {
            ++active;
            CHECK(bg.point(i).norm() <= 1.0 + 1e-12);
        }
    CHECK(active < bg.size());
    CHECK(active > 300);
    CHECK(bg.active(bg.nearest_active(vec_of({0.99, 0.99}))));
    CHECK_THROWS_AS(hjb::Grid::over(p.domain(), 2), std::invalid_argument);
}

TEST_CASE("constant cost solves to one exactly")
{
    const auto p = builtin_problem("constant_cost");
    const auto g = hjb::Grid::over(p.domain(), 51);
    for (double lambda : {1.0, 0.1, 0.01}) {
        const auto f = hjb::solve_discounted(p, lambda, g);
        for (double v : f.values)
            CHECK(v == doctest::Approx(1.0).epsilon(1e-13));
        CHECK(f.residual_norm < 1e-12);
    }
}

TEST_CASE("decay quadratic matches the closed form within O(h)")
{
    const auto p = builtin_problem("decay_quadratic");
    const auto g = hjb::Grid::over(p.domain(), 401);
    const double h = g.spacing()[0];
    for (double lambda : {1.0, 0.25, 0.0625, 2.0}) {
        const auto f = hjb::solve_discounted(p, lambda, g);
        double err = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i)
            err = std::max(err, std::abs(f.values[i] - closed_form_decay(lambda, g.point(i)[0])));
        CHECK(err <= 5 * h);
        CHECK(f.residual_norm < 1e-8);
        // Faster decay is optimal away from the origin.
        CHECK(f.policy[0] == 1);
        CHECK(f.policy[400] == 1);
    }
    const auto f2 = hjb::solve_discounted(p, 2.0, g);
    CHECK(f2.values[400] == doctest::Approx(0.5).epsilon(5 * h));
}

TEST_CASE("example_2_3 has zero value")
{
    const auto p = builtin_problem("example_2_3");
    const auto g = hjb::Grid::over(p.domain(), 101);
    const auto f = hjb::solve_discounted(p, 0.5, g);
    for (double v : f.values)
        CHECK(std::abs(v) < 1e-12);
    // Independent oracle: the backward solver from an interior start.
    bsde::SchemeConfig cfg;
    cfg.dt = 0.02;
    cfg.path_count = 2000;
    const auto path = bsde::solve_infinite_horizon(p, vec_of({0.4}), sde::constant_policy(0), 0.5, 1e-6, 1.0, cfg);
    CHECK(std::abs(path.y_values[0]) < 1e-12);
}

TEST_CASE("node update is monotone in neighbor values")
{
    const auto p = model::parse_problem(kBall2d);
    const auto g = hjb::Grid::over(p.domain(), 25);
    const auto stencils = hjb::build_stencils(p, g, {});
    std::vector<double> v(g.size());
    for (std::size_t i = 0; i < g.size(); ++i)
        v[i] = rng::uniform(11, rng::Stream::sampling, i, 0);
    for (std::uint64_t k = 0; k < 300; ++k) {
        const auto i = static_cast<std::size_t>(rng::uniform(11, rng::Stream::sampling, k, 1) * g.size());
        if (!g.active(i))
            continue;
        const auto j = static_cast<std::size_t>(rng::uniform(11, rng::Stream::sampling, k, 2) * g.size());
        const double before = hjb::node_update(stencils.data() + i * 2, 2, v, 0.3, nullptr);
        auto bumped = v;
        bumped[j] += rng::uniform(11, rng::Stream::sampling, k, 3);
        const double after = hjb::node_update(stencils.data() + i * 2, 2, bumped, 0.3, nullptr);
        CHECK(after >= before);
    }
}

TEST_CASE("serial and parallel sweeps agree bitwise")
{
    const auto p = model::parse_problem(kBall2d);
    const auto g = hjb::Grid::over(p.domain(), 41);
    const auto stencils = hjb::build_stencils(p, g, {});
    std::vector<double> v(g.size());
    for (std::size_t i = 0; i < g.size(); ++i)
        v[i] = std::sin(static_cast<double>(i));
    std::vector<double> a, b;
    std::vector<int> ua, ub;
    hjb::kernels::bellman_sweep_serial(g, stencils, 2, v, 0.2, a, ua);
    hjb::kernels::bellman_sweep_parallel(g, stencils, 2, v, 0.2, b, ub);
    CHECK(a == b);
    CHECK(ua == ub);

    hjb::SolverConfig serial;
    serial.parallel = false;
    const auto fs = hjb::solve_discounted(p, 0.5, g, serial);
    const auto fp = hjb::solve_discounted(p, 0.5, g);
    CHECK(fs.values == fp.values);
    CHECK(fs.policy == fp.policy);
}

TEST_CASE("ball domain solve respects bounds")
{
    const auto p = model::parse_problem(kBall2d);
    const auto g = hjb::Grid::over(p.domain(), 41);
    const auto f = hjb::solve_discounted(p, 0.5, g);
    const auto report = hjb::bound_check(f, p, 1e-6, 10 * g.max_spacing());
    CHECK(report.passed());
    // Control 1 doubles the x2 cost; control 0 is always at least as cheap.
    for (std::size_t i = 0; i < g.size(); ++i)
        if (g.active(i))
            CHECK(f.policy[i] == 0);
}

TEST_CASE("cross-coupled diffusion on a square grid is refused")
{
    const auto p = model::parse_problem(kCorrelated2d);
    // a = [[0.04, 0.08], [0.08, 0.16]] needs h2 >= 2 h1.
    CHECK_THROWS_AS(hjb::solve_discounted(p, 1.0, hjb::Grid::over(p.domain(), 21)), hjb::CflError);
    try {
        hjb::solve_discounted(p, 1.0, hjb::Grid::over(p.domain(), 21));
    } catch (const hjb::CflError& e) {
        CHECK(std::string(e.what()).find(">= 2") != std::string::npos);
    }
    // Axis 2 coarse enough for axis 1, and axis 2 dominates its own coupling.
    const auto f = hjb::solve_discounted(p, 1.0, hjb::Grid::over(p.domain(), std::vector<int>{41, 21}));
    CHECK(f.residual_norm < 1e-8);
}

TEST_CASE("non-convergence is reported with the residual")
{
    const auto p = builtin_problem("decay_quadratic");
    hjb::SolverConfig cfg;
    cfg.max_iter = 1;
    try {
        hjb::solve_discounted(p, 0.1, hjb::Grid::over(p.domain(), 101), cfg);
        FAIL("expected ConvergenceError");
    } catch (const hjb::ConvergenceError& e) {
        CHECK(e.iterations() == 1);
        CHECK(e.residual() >= 0.0);
    }
    CHECK_THROWS_AS(hjb::solve_discounted(p, 0.0, hjb::Grid::over(p.domain(), 11)), std::invalid_argument);
}

TEST_CASE("warm start reaches the same field")
{
    const auto p = builtin_problem("split_homogeneous");
    const auto g = hjb::Grid::over(p.domain(), 201);
    const auto f1 = hjb::solve_discounted(p, 1.0, g);
    const auto cold = hjb::solve_discounted(p, 0.25, g);
    const auto warm = hjb::solve_discounted(p, 0.25, g, {}, &f1);
    for (std::size_t i = 0; i < g.size(); ++i)
        CHECK(warm.values[i] == doctest::Approx(cold.values[i]).epsilon(1e-9));
}

TEST_CASE("comparison gap under shifts and scaling")
{
    const auto p = builtin_problem("decay_quadratic");
    const auto g = hjb::Grid::over(p.domain(), 201);
    const double lambda = 0.25;
    const auto f1 = hjb::solve_discounted(p, lambda, g);

    const auto shifted = model::shifted_cost(p, 0.3);
    const auto f2 = hjb::solve_discounted(shifted, lambda, g);
    const auto gap = hjb::comparison_gap(f1, f2, p, shifted);
    CHECK(gap.passed());
    CHECK(gap.find("sup_psi_difference")->measured == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(gap.find("gap_21")->measured == doctest::Approx(0.3).epsilon(1e-9));
    CHECK(gap.find("gap_12")->measured == doctest::Approx(-0.3).epsilon(1e-9));

    const auto same = hjb::comparison_gap(f1, f1, p, p);
    CHECK(same.passed());
    CHECK(same.find("gap_12")->measured == 0.0);

    const auto scaled = model::scaled_cost(p, 1.5);
    const auto f3 = hjb::solve_discounted(scaled, lambda, g);
    const auto sg = hjb::comparison_gap(f1, f3, p, scaled);
    CHECK(sg.passed());
    CHECK(sg.find("gap_21")->margin() > 0.0);

    const auto other = hjb::solve_discounted(p, lambda, hjb::Grid::over(p.domain(), 101));
    CHECK_THROWS_AS(hjb::comparison_gap(f1, other, p, p), std::invalid_argument);
}

TEST_CASE("bound inheritance on nonexpansive catalog problems")
{
    for (const char* name : {"constant_cost", "decay_quadratic", "split_homogeneous", "example_2_3", "decay_softabs"}) {
        const auto p = builtin_problem(name);
        const auto g = hjb::Grid::over(p.domain(), 201);
        for (double lambda : {1.0, 0.25, 0.0625}) {
            const auto f = hjb::solve_discounted(p, lambda, g);
            const auto report = hjb::bound_check(f, p, 1e-6, 10 * g.max_spacing());
            CHECK_MESSAGE(report.passed(), name, " lambda=", lambda);
        }
    }
}

TEST_CASE("grid value agrees with the backward solver under the extracted feedback")
{
    const auto p = builtin_problem("decay_quadratic");
    const auto g = hjb::Grid::over(p.domain(), 401);
    const double lambda = 1.0;
    const auto f = hjb::solve_discounted(p, lambda, g);
    const auto policy = hjb::feedback_policy(f);
    bsde::SchemeConfig cfg;
    cfg.dt = 0.005;
    cfg.path_count = 64;
    for (double x : {-0.9, -0.35, 0.1, 0.55, 0.8}) {
        const auto path = bsde::solve_infinite_horizon(p, vec_of({x}), policy, lambda, 1e-6, 1.0, cfg);
        const double tol = std::max(3 * path.std_error, 5 * g.spacing()[0]) + path.tail_error_bound;
        CHECK(std::abs(lambda * path.y_values[0] - f.interpolate(vec_of({x}))) <= tol);
    }
}
