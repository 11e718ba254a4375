#include "vandisc/conditions.hpp"

#include "vandisc/sde.hpp"

#include <doctest.h>

#include <cmath>

using namespace vandisc;
using model::builtin_problem;

TEST_CASE("example_2_3 g matches its closed form")
{
    const auto p = builtin_problem("example_2_3");
    const auto result = conditions::nonexpansivity_check(p, 1000, 16, 7);
    CHECK(result.report.passed());
    REQUIRE(result.samples.size() == 1000);
    double worst = 0.0;
    for (const auto& s : result.samples) {
        REQUIRE(s.v.has_value());
        const double expected = -1.5 * (s.x - s.xp).squaredNorm();
        worst = std::max(worst, std::abs(conditions::g_function(p, s.x, s.xp, s.u, *s.v) - expected));
        CHECK(s.g == conditions::g_function(p, s.x, s.xp, s.u, *s.v));
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("decay quadratic keeps v = u")
{
    const auto p = builtin_problem("decay_quadratic");
    const auto result = conditions::nonexpansivity_check(p, 500, 8, 3);
    CHECK(result.report.passed());
    for (const auto& s : result.samples) {
        REQUIRE(s.v.has_value());
        CHECK(*s.v == s.u);
        // g = -u (x - x')^2 with the control value u.
        CHECK(s.g == doctest::Approx(-p.control(s.u)[0] * (s.x - s.xp).squaredNorm()).epsilon(1e-12));
    }
}

TEST_CASE("expanding dynamics fail with a witness")
{
    const auto p = builtin_problem("expanding");
    const auto result = conditions::nonexpansivity_check(p, 200, 8, 3);
    CHECK_FALSE(result.report.passed());
    const Check* failure = result.report.first_failure();
    REQUIRE(failure != nullptr);
    CHECK(failure->witness.find("x = ") != std::string::npos);
    CHECK(failure->measured > 0.0);
    CHECK_THROWS_AS(conditions::FeedbackSelector::build(p, 11, 1e-12), conditions::SelectorError);
}

TEST_CASE("non-split costs are sampled over a z ball")
{
    const auto p = builtin_problem("decay_softabs");
    const auto zs = conditions::z_ball(p, 32);
    CHECK(zs.size() == 32);
    CHECK(zs[0].norm() == 0.0);
    for (const Vec& z : zs)
        CHECK(z.cwiseAbs().maxCoeff() <= 10.0);
    const auto result = conditions::nonexpansivity_check(p, 300, 32, 1);
    CHECK(result.report.passed());
    CHECK_FALSE(result.report.notes().empty());
}

TEST_CASE("feedback selector lattices")
{
    const auto e = builtin_problem("example_2_3");
    const auto se = conditions::FeedbackSelector::build(e, 21, 1e-12);
    CHECK(se.lattice_points() == 21 * 21 * e.control_count());
    for (auto v : se.table())
        CHECK(v == 0);
    CHECK(se.max_g() <= 1e-12);

    const auto d = builtin_problem("decay_quadratic");
    const auto sd = conditions::FeedbackSelector::build(d, 41, 1e-12);
    CHECK(sd.switched_fraction() == 0.0);
    CHECK(sd(vec_of({0.5}), vec_of({0.45}), 1) == 1);
    CHECK(sd(vec_of({-0.2}), vec_of({-0.25}), 0) == 0);
    CHECK(sd.max_psi_tilde() <= 1e-12);
}

TEST_CASE("girsanov densities are martingales")
{
    const int d = 1;
    const std::size_t paths = 20000, steps = 100;
    const double dt = 0.01;
    for (std::size_t j = 0; j < 4; ++j) {
        const auto w = conditions::draw_gamma(9, j, d, 1.0, 10, 10);
        for (const Vec& g : w.pieces)
            CHECK(g.norm() <= 1.0);
        if (j == 0)
            for (const Vec& g : w.pieces)
                CHECK(g.norm() == 0.0);
        double sum = 0.0, sq = 0.0;
        for (std::size_t p = 0; p < paths; ++p) {
            double l = 1.0;
            for (std::size_t k = 0; k < steps; ++k)
                l *= w.step_factor(k, sde::brownian_increment(9, p, k, d, dt), dt);
            CHECK(l >= 0.0);
            sum += l;
            sq += l * l;
        }
        const double mean = sum / paths;
        const double se = std::sqrt((sq / paths - mean * mean) / (paths - 1));
        CHECK(std::abs(mean - 1.0) <= 4 * se + 1e-12);
    }
}

TEST_CASE("stochastic nonexpansivity probe examples")
{
    conditions::ProbeConfig cfg;
    cfg.path_count = 500;
    cfg.gamma_count = 4;

    const auto e = builtin_problem("example_2_3");
    const auto se = conditions::FeedbackSelector::build(e, 21, 1e-12);
    const auto same = conditions::stochastic_nonexpansivity_pair(e, se, vec_of({0.4}), vec_of({0.4}), 0, cfg);
    CHECK(same.passed());
    CHECK(same.find("weighted_distance_sq")->measured == 0.0);

    const auto d = builtin_problem("decay_quadratic");
    const auto sd = conditions::FeedbackSelector::build(d, 41, 1e-12);
    const auto pair = conditions::stochastic_nonexpansivity_pair(d, sd, vec_of({0.5}), vec_of({0.3}), 1, cfg);
    CHECK(pair.passed());
    // Deterministic flow: the distance never exceeds 0.2.
    CHECK(pair.find("weighted_distance_sq")->measured <= 0.04 + 1e-12);

    // Without a qualifying selector the coupled distance grows like e^t.
    const auto x = builtin_problem("expanding");
    const auto loose = conditions::FeedbackSelector::build(x, 11, 1e9);
    const auto bad = conditions::stochastic_nonexpansivity_pair(x, loose, vec_of({0.1}), vec_of({-0.1}), 0, cfg);
    CHECK_FALSE(bad.passed());
}

TEST_CASE("nonexpansivity implies the stochastic probe across the catalog")
{
    for (const auto& name : model::catalog_names()) {
        const auto p = builtin_problem(name);
        if (!conditions::nonexpansivity_check(p, 200, 16, 1).report.passed())
            continue;
        const auto selector = conditions::FeedbackSelector::build(p, 21, 1e-12);
        conditions::ProbeConfig cfg;
        cfg.epsilon = 0.05;
        const auto report = conditions::stochastic_nonexpansivity_probe(p, selector, cfg);
        const Check* failure = report.first_failure();
        CHECK_MESSAGE(report.passed(), name, " ", failure ? failure->name : "");
    }
}
