#pragma once

#include "vandisc/hjb.hpp"
#include "vandisc/model.hpp"
#include "vandisc/report.hpp"

#include <cstdint>
#include <vector>

namespace vandisc::limit {

using model::ControlProblem;

struct LambdaSweep {
    std::vector<double> lambdas;           // strictly decreasing
    std::vector<hjb::ValueField> fields;   // one per lambda, common grid
    hjb::ValueField w0;                    // field at the smallest lambda unless extrapolated
    std::vector<double> sup_gaps;          // sup |lambda_k V_k - lambda_{k+1} V_{k+1}|
    double monotone_violation = 0.0;       // max of lambda' V' - lambda V over lambda' < lambda, floored at 0
    double solver_tol = 0.0;
    bool extrapolated = false;

    double last_gap() const { return sup_gaps.empty() ? 0.0 : sup_gaps.back(); }
};

class SweepError : public std::runtime_error {
public:
    SweepError(const std::string& message, double lambda) : std::runtime_error(message), lambda_(lambda) {}
    double lambda() const { return lambda_; }

private:
    double lambda_;
};

// Solves each lambda in turn, warm-starting from the previous field. With
// richardson set, w0 extrapolates the last two fields linearly to lambda = 0.
LambdaSweep lambda_sweep(const ControlProblem& problem, const hjb::Grid& grid, const std::vector<double>& lambdas,
                         const hjb::SolverConfig& config = {}, bool richardson = false);

// lambda' < lambda implies lambda' V' <= lambda V + 2 solver_tol at every node.
ConditionReport monotonicity_check(const LambdaSweep& sweep);

// H(x, l p, l A) nondecreasing along l_grid restricted to l >= 1, and
// H(x, p, A) >= H(x, 0, 0), on quasi-random (x, p, A).
ConditionReport radial_monotonicity_check(const ControlProblem& problem, std::size_t sample_count,
                                          const std::vector<double>& l_grid, std::uint64_t seed);

// w0 + Hbar(x, D w0, D^2 w0) <= tol_residual at interior nodes. The envelope
// scans l in [2^-10, 1 / lambda_min]; nodes whose full-range envelope
// diverges are flagged rather than failed.
ConditionReport subsolution_residual(const LambdaSweep& sweep, const ControlProblem& problem, double tol_residual);

// When at least 95% of interior samples (x, p with |p| = 10, A) diverge,
// checks max w0 - min w0 <= c0 h sqrt(N) + 2 solver_tol + last sup_gap;
// otherwise the report is marked not applicable.
ConditionReport constancy_check(const LambdaSweep& sweep, const ControlProblem& problem,
                                std::size_t sample_count = 128, std::uint64_t seed = 1);

struct Recession {
    double value = 0.0;                 // Richardson limit averaged over the sampled x
    double spread = 0.0;                // x-spread of the Richardson limits
    std::vector<double> spreads;        // x-spread of lambda psi(x, z / lambda, u) per lambda
    std::vector<std::vector<double>> sequences;  // per sampled x, per lambda
    std::vector<Vec> xs;
    bool cauchy = true;                 // successive differences nonincreasing at every x
    bool converged = true;
};

Recession recession_driver(const ControlProblem& problem, const Vec& z, std::size_t control,
                           const std::vector<double>& lambda_seq, std::uint64_t seed = 1);

// w0 <= min_v psi(x, 0, v) + tol at every node; tol = max(1e-9, 2 solver_tol).
ConditionReport pointwise_cost_bound(const LambdaSweep& sweep, const ControlProblem& problem);

// Discrete first and second derivatives of a field at an interior node;
// false when a needed neighbor is missing.
bool discrete_derivatives(const hjb::Grid& grid, const std::vector<double>& values, std::size_t node, Vec& p,
                          Mat& a);

}  // namespace vandisc::limit
