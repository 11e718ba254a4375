#pragma once

#include "vandisc/model.hpp"
#include "vandisc/regression.hpp"
#include "vandisc/report.hpp"
#include "vandisc/sde.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace vandisc::bsde {

using model::ControlProblem;

// Driver f(x, z, u) of dY = -(f - lambda Y) dt + Z dW.
using DriverFn = std::function<double(const Vec& x, const Vec& z, std::size_t u)>;
// Terminal value from the state and the Brownian motion at the horizon.
using TerminalFn = std::function<double(const Vec& x, const Vec& w)>;

struct SchemeConfig {
    double dt = 0.01;
    std::size_t path_count = 1000;
    std::uint64_t seed = 1;
    int degree = 4;
    // Adds W_t to the regressors; needed when the terminal depends on W.
    bool regress_on_brownian = false;
    bool parallel = true;
    // Keeps the per-step Z regression so Z can be evaluated off the cloud.
    bool keep_z_models = false;
};

struct BackwardResult {
    std::vector<double> time_grid;
    std::vector<double> y_values;  // along path 0, one per grid time
    std::vector<Vec> z_values;     // along path 0, one per step
    std::vector<Vec> states;       // path 0
    double y0 = 0.0;
    Vec z0;
    double std_error = 0.0;
    // sum_k e^{-2 lambda t_k} E|Z_k|^2 dt_k over the whole grid.
    double z_energy = 0.0;
    int min_degree = 0;
    std::size_t degree_reductions = 0;
    std::vector<double> y0_samples;  // pathwise estimator of Y_0
    std::vector<Regression::Model> z_models;  // per step when requested
    bool regress_on_brownian = false;

    // Z at step k for a state (and Brownian value when regressed on W).
    Vec z_at(std::size_t step, const Vec& x, const Vec& w) const;
};

// Backward Euler on the path cloud: Y_k = (E[Y_{k+1} | F_k] + dt f(X_k, Z_k, u_k)) / (1 + lambda dt),
// Z_k = E[(Y_{k+1} - E[Y_{k+1} | F_k]) dW_k | F_k] / dt, conditional expectations by regression.
BackwardResult solve_backward(const ControlProblem& problem, const Vec& x0, const sde::Policy& policy, double lambda,
                              double horizon, const DriverFn& driver, const TerminalFn& terminal,
                              const SchemeConfig& config);

struct BsdePath {
    std::vector<double> time_grid;
    std::vector<double> y_values;
    std::vector<Vec> z_values;
    double lambda = 0.0;
    double truncation_horizon = 0.0;
    double tail_error_bound = 0.0;
    double std_error = 0.0;
    double z_energy = 0.0;
    std::size_t degree_reductions = 0;
};

// Y_n = 0 with driver psi(x, z, u) and discount lambda.
BsdePath solve_finite_horizon(const ControlProblem& problem, const Vec& x0, const sde::Policy& policy, double lambda,
                              double horizon, const SchemeConfig& config);

// m = T + ln(M / (lambda tol)) / lambda, clamped to m >= T.
double truncation_horizon(double bound_M, double lambda, double tol, double output_horizon);

// Truncates at the horizon above and reports the path on [0, T].
BsdePath solve_infinite_horizon(const ControlProblem& problem, const Vec& x0, const sde::Policy& policy,
                                double lambda, double tol, double output_horizon, const SchemeConfig& config);

// |Y| <= M / lambda + tail and the discounted Z energy bound, the latter with
// relative slack numerical_slack.
ConditionReport y_bound_check(const BsdePath& path, const ControlProblem& problem, double numerical_slack = 0.05);

struct GExpectationResult {
    double value = 0.0;
    double std_error = 0.0;
    double horizon = 0.0;
    std::string scheme;
    double dt = 0.0;
    std::size_t path_count = 0;
    int degree = 0;
    Vec z0;
    std::vector<double> samples;
};

// Y_s = eta + int_s^t g(Z) dr - int_s^t Z dW with eta = terminal(X_t, W_t).
GExpectationResult g_expectation(const std::function<double(const Vec& z)>& g, const TerminalFn& terminal,
                                 const ControlProblem& problem, const Vec& x0, const sde::Policy& policy,
                                 double horizon, const SchemeConfig& config);

}  // namespace vandisc::bsde
