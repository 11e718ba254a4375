#pragma once

#include "vandisc/model.hpp"
#include "vandisc/report.hpp"
#include "vandisc/sde.hpp"
#include "vandisc/types.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

namespace vandisc::hjb {

using model::ControlProblem;

// Uniform lattice over the bounding box of a domain; nodes outside the
// domain are inactive.
class Grid {
public:
    static Grid over(const model::Domain& domain, int nodes_per_axis);
    static Grid over(const model::Domain& domain, const std::vector<int>& nodes_per_axis);

    int dim() const { return dim_; }
    std::size_t size() const { return size_; }
    const std::vector<int>& nodes() const { return nodes_; }
    const Vec& lower() const { return lower_; }
    const Vec& upper() const { return upper_; }
    const Vec& spacing() const { return spacing_; }
    double max_spacing() const { return spacing_.maxCoeff(); }

    Vec point(std::size_t index) const;
    std::array<int, kMaxDim> coords(std::size_t index) const;
    bool active(std::size_t index) const { return active_[index] != 0; }
    // Active with every axis neighbor active.
    bool interior(std::size_t index) const;
    // Index of the node offset by `offset` lattice steps, or -1 if absent or inactive.
    std::ptrdiff_t shifted(std::size_t index, const std::array<int, kMaxDim>& offset) const;
    std::size_t nearest_active(const Vec& x) const;
    // Multilinear interpolation, renormalized over active corners.
    double interpolate(const std::vector<double>& values, const Vec& x) const;

    friend bool operator==(const Grid& a, const Grid& b);

private:
    int dim_ = 0;
    std::vector<int> nodes_;
    Vec lower_, upper_, spacing_;
    std::size_t size_ = 0;
    std::vector<std::uint8_t> active_;
};

struct ValueField {
    Grid grid;
    double lambda = 0.0;
    std::vector<double> values;  // lambda * V_lambda per node
    std::vector<int> policy;     // minimizing control per node, -1 when inactive
    double residual_norm = 0.0;  // sup |lambda V - lambda T(V)|
    std::size_t iterations = 0;
    double tol = 0.0;

    double interpolate(const Vec& x) const { return grid.interpolate(values, x); }
};

struct HamiltonianProbe {
    Vec x, p;
    Mat A;
    double value = 0.0;
    std::size_t argmax = 0;
};

// H(x,p,A) = max_u { -p.b - tr(sigma sigma^T A)/2 - psi(x, sigma^T p, u) }.
HamiltonianProbe hamiltonian(const ControlProblem& problem, const Vec& x, const Vec& p, const Mat& A);
double capped_hamiltonian(const ControlProblem& problem, const Vec& x, const Vec& p, const Mat& A);

using HamiltonianFn = std::function<double(const Vec& x, const Vec& p, const Mat& A)>;
HamiltonianFn hamiltonian_fn(const ControlProblem& problem);

struct Envelope {
    double value = 0.0;
    bool diverged = false;
};

// Geometric grid 2^-10 .. 2^10.
std::vector<double> default_l_grid();
inline constexpr double kDivergenceFactor = 1e3;

// min(M0, max over l of H(x, l p, l A)); diverged when H at the largest l
// exceeds the threshold and is still increasing.
Envelope envelope_hamiltonian(const HamiltonianFn& h, double cap_M0, const Vec& x, const Vec& p, const Mat& A,
                              const std::vector<double>& l_grid, double divergence_threshold);
Envelope envelope_hamiltonian(const ControlProblem& problem, const Vec& x, const Vec& p, const Mat& A,
                              const std::vector<double>& l_grid, double divergence_threshold);

struct SolverConfig {
    std::size_t max_iter = 10000;
    double tol = 1e-8;
    bool parallel = true;
};

class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& message, double residual, std::size_t iterations)
        : std::runtime_error(message), residual_(residual), iterations_(iterations)
    {
    }
    double residual() const { return residual_; }
    std::size_t iterations() const { return iterations_; }

private:
    double residual_;
    std::size_t iterations_;
};

class CflError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Transition rates of the controlled Markov chain at one node for one control.
struct Stencil {
    static constexpr int kMaxNeighbors = 2 * kMaxDim + 2 * kMaxDim * (kMaxDim - 1) / 2 * 2;
    std::array<std::int32_t, kMaxNeighbors> neighbor{};
    std::array<double, kMaxNeighbors> rate{};
    int count = 0;
    double total_rate = 0.0;
    double source = 0.0;  // psi(x, 0, u)
};

// Stencils for every (node, control), node-major. gradient holds the lagged
// discrete gradient (dim per node) entering psi through z = sigma^T p.
std::vector<Stencil> build_stencils(const ControlProblem& problem, const Grid& grid,
                                    const std::vector<double>& gradient);

// Discrete gradient of V with central differences, one-sided at the boundary.
std::vector<double> discrete_gradient(const Grid& grid, const std::vector<double>& v);

// Minimizing update at one node: min_u (sum_y q V(y) + c_u) / (lambda + Q_u).
double node_update(const Stencil* stencils, std::size_t control_count, const std::vector<double>& v, double lambda,
                   std::size_t* argmin);

namespace kernels {

// One Jacobi sweep of node_update over all active nodes.
void bellman_sweep_serial(const Grid& grid, const std::vector<Stencil>& stencils, std::size_t control_count,
                          const std::vector<double>& v, double lambda, std::vector<double>& out,
                          std::vector<int>& argmin);
void bellman_sweep_parallel(const Grid& grid, const std::vector<Stencil>& stencils, std::size_t control_count,
                            const std::vector<double>& v, double lambda, std::vector<double>& out,
                            std::vector<int>& argmin);

}  // namespace kernels

// Discounted HJB on the grid by policy iteration with exact policy
// evaluation; warm_start may hold a field for another lambda on the same grid.
ValueField solve_discounted(const ControlProblem& problem, double lambda, const Grid& grid,
                            const SolverConfig& config = {}, const ValueField* warm_start = nullptr);

// Feedback policy reading the field's minimizing control at the nearest node.
sde::Policy feedback_policy(const ValueField& field);

// Equiboundedness |lambda V| <= M + value_tol and discrete Lipschitz quotient
// between neighbors <= c0 + lipschitz_slack.
ConditionReport bound_check(const ValueField& field, const ControlProblem& problem, double value_tol,
                            double lipschitz_slack);

// lambda (V1 - V2) <= sup |psi1 - psi2| + 2 (tol1 + tol2), both directions.
ConditionReport comparison_gap(const ValueField& field1, const ValueField& field2, const ControlProblem& problem1,
                               const ControlProblem& problem2, std::size_t z_samples = 64);

}  // namespace vandisc::hjb
