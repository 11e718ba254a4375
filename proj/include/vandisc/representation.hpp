#pragma once

#include "vandisc/bsde.hpp"
#include "vandisc/hjb.hpp"
#include "vandisc/limit.hpp"
#include "vandisc/model.hpp"
#include "vandisc/report.hpp"
#include "vandisc/sde.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace vandisc::representation {

using model::ControlProblem;

struct NamedPolicy {
    std::string name;
    sde::Policy policy;
};

// Every constant control, plus the field's feedback policy when given.
std::vector<NamedPolicy> policy_family(const ControlProblem& problem, const hjb::ValueField* field = nullptr);

struct MonteCarloConfig {
    double dt = 0.02;
    std::size_t path_count = 1000;
    std::uint64_t seed = 1;
    int degree = 3;
};

// Max over grid nodes of lambda |V(x) - min over the family of G_{0,t}[V(X_t)]|
// against 3 lambda se + c0 h + 10 dt. node_stride > 1 checks every k-th node.
ConditionReport dpp_residual(const ControlProblem& problem, const hjb::ValueField& field, double t,
                             const std::vector<NamedPolicy>& family, const MonteCarloConfig& config,
                             std::size_t node_stride = 1);

// psi = psi1(x, u) + g(z). Problems without a declared split but with K_z = 0
// use psi1 = psi(x, 0, u) and g = 0.
model::SplitForm effective_split(const ControlProblem& problem);

// 6 / (fastest empirical contraction rate over constant controls), clamped to [1, 50].
double default_t_max(const ControlProblem& problem, std::uint64_t seed = 1);

// t_grid_n points uniformly on [0, t_max].
std::vector<double> t_grid(double t_max, std::size_t t_grid_n);

struct Cell {
    double t = 0.0;
    std::size_t policy = 0;
    double value = 0.0;
    double std_error = 0.0;
};

struct RepresentationResult {
    Vec x;
    double value = 0.0;      // inf over cells of eps^g[min_v psi1(X_t, v)]
    double std_error = 0.0;  // at the minimizing cell
    double argmin_t = 0.0;
    std::size_t argmin_policy = 0;
    std::string policy_name;
    std::vector<double> t_grid;
    std::vector<Cell> cells;
    // Drop of the running infimum over the last 10% of the t-grid.
    double tail_allowance = 0.0;
    std::string tail_note;
};

RepresentationResult representation_value(const ControlProblem& problem, const Vec& x,
                                          const std::vector<double>& t_grid, const std::vector<NamedPolicy>& family,
                                          const MonteCarloConfig& config);

// Same formula with a caller-supplied driver g, for comparison runs.
RepresentationResult representation_value(const ControlProblem& problem, const Vec& x,
                                          const std::vector<double>& t_grid, const std::vector<NamedPolicy>& family,
                                          const MonteCarloConfig& config,
                                          const std::function<double(const Vec& z)>& g);

// Evenly spread active nodes of the grid.
std::vector<std::size_t> sample_nodes(const hjb::Grid& grid, std::size_t count);

// |w0(x) - representation(x)| <= 3 se + last sup_gap + c0 h + tail allowance
// at sample nodes; for split costs with g != 0 also checks the g-expectation
// against the g = 0 run on common seeds.
ConditionReport representation_crosscheck(const limit::LambdaSweep& sweep, const ControlProblem& problem,
                                          std::size_t node_count, const std::vector<double>& t_grid,
                                          const MonteCarloConfig& config);

using RecessionFn = std::function<double(const Vec& z, std::size_t u)>;

// psi~ = g for split costs, otherwise the Richardson recession limit at the
// domain center along lambda_seq.
RecessionFn recession_fn(const ControlProblem& problem, const std::vector<double>& lambda_seq = {1e-1, 1e-2, 1e-3});

// w0(x) <= inf over (t, policy) of G^{psi~}_{0,t}[min_v psi(X_t, 0, v)] + 3 se + last sup_gap + c0 h.
ConditionReport generalized_upper_bound(const limit::LambdaSweep& sweep, const ControlProblem& problem,
                                        const RecessionFn& recession, std::size_t node_count,
                                        const std::vector<double>& t_grid, const MonteCarloConfig& config);

}  // namespace vandisc::representation
