#pragma once

#include "vandisc/model.hpp"
#include "vandisc/report.hpp"
#include "vandisc/types.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

namespace vandisc::conditions {

using model::ControlProblem;

// g(x,x',u,v) = <x-x', b(x,u)-b(x',v)> + |sigma(x,u)-sigma(x',v)|^2 / 2
//             + K_z |sigma(x,u)-sigma(x',v)| |x-x'|.
double g_function(const ControlProblem& problem, const Vec& x, const Vec& xp, std::size_t u, std::size_t v);

// Sample ball for z: zero plus Halton points of radius 10 * max(K_z, 1).
std::vector<Vec> z_ball(const ControlProblem& problem, std::size_t count);

// sup over z of |psi(x,z,u) - psi(x',z,v)| - c0 |x-x'|; split problems are
// evaluated z-free since g(z) cancels.
double psi_tilde(const ControlProblem& problem, const Vec& x, const Vec& xp, std::size_t u, std::size_t v,
                 const std::vector<Vec>& zs);

struct PairSample {
    Vec x, xp;
    std::size_t u = 0;
    std::optional<std::size_t> v;  // selected control, empty when none qualifies
    double g = 0.0;                // g at the selected control, or at the best candidate
    double psi_tilde = 0.0;
};

struct NonexpansivityResult {
    ConditionReport report;
    std::vector<PairSample> samples;
};

// For each sampled (x, x', u) looks for v with g <= 0 and psi_tilde <= 0,
// preferring v = u and then the lowest index.
NonexpansivityResult nonexpansivity_check(const ControlProblem& problem, std::size_t pair_count,
                                          std::size_t z_samples, std::uint64_t seed);

class SelectorError : public std::runtime_error {
public:
    SelectorError(const std::string& message, Vec x, Vec xp, std::size_t u)
        : std::runtime_error(message), x_(std::move(x)), xp_(std::move(xp)), u_(u)
    {
    }
    const Vec& x() const { return x_; }
    const Vec& xp() const { return xp_; }
    std::size_t u() const { return u_; }

private:
    Vec x_, xp_;
    std::size_t u_;
};

// Nearest-lattice lookup of a control in Xi(x, x', u) up to slack, over a
// lattice of `resolution` nodes per axis on the bounding box of the domain
// squared, times the control list.
class FeedbackSelector {
public:
    static FeedbackSelector build(const ControlProblem& problem, int resolution, double slack,
                                  std::size_t z_samples = 32);

    std::size_t operator()(const Vec& x, const Vec& xp, std::size_t u) const;

    int resolution() const { return resolution_; }
    std::size_t lattice_points() const { return table_.size(); }
    double slack() const { return slack_; }
    // Worst g and psi_tilde over the lattice at the stored controls.
    double max_g() const { return max_g_; }
    double max_psi_tilde() const { return max_psi_tilde_; }
    // Share of lattice points where the stored control differs from u.
    double switched_fraction() const;
    const std::vector<std::uint8_t>& table() const { return table_; }

private:
    std::size_t lattice_index(const Vec& x) const;

    int dim_ = 0;
    int resolution_ = 0;
    std::size_t controls_ = 0;
    std::size_t states_ = 0;
    Vec lower_, spacing_;
    double slack_ = 0.0;
    double max_g_ = 0.0;
    double max_psi_tilde_ = 0.0;
    std::vector<std::uint8_t> table_;  // index (ix * states + ixp) * controls + u
};

// Piecewise-constant Girsanov drift; the density advances by
// exp(gamma . dW - |gamma|^2 dt / 2) per step, an exact martingale.
struct GirsanovWeight {
    std::vector<Vec> pieces;
    std::size_t steps_per_piece = 1;

    const Vec& gamma(std::size_t step) const;
    double step_factor(std::size_t step, const Vec& dw, double dt) const;
};

// Index 0 is gamma = 0; others draw each piece uniformly from the K_z-ball.
GirsanovWeight draw_gamma(std::uint64_t seed, std::size_t index, int noise_dim, double k_z, std::size_t piece_count,
                          std::size_t steps_per_piece);

struct ProbeConfig {
    double lambda = 1.0;
    double epsilon = 0.05;
    std::size_t gamma_count = 8;
    std::size_t path_count = 2000;
    double dt = 0.01;
    double resync_dt = 0.0;  // 0 means 10 dt
    std::size_t pair_count = 4;
    std::uint64_t seed = 1;
    int degree = 3;
};

// Coupled paths from (x, u) and (x', v) under common noise, v re-selected
// every resync_dt. Estimates E[L |X - X'|^2] at the resync times against
// (|x - x'| + eps)^2 and the discounted weighted cost difference against
// c0 |x - x'| + eps, both with 3 standard errors; gamma is piecewise
// constant on the resync grid and drawn uniformly from the K_z-ball.
ConditionReport stochastic_nonexpansivity_pair(const ControlProblem& problem, const FeedbackSelector& selector,
                                               const Vec& x, const Vec& xp, std::size_t u, const ProbeConfig& config);

// Runs the pair probe on config.pair_count sampled triples.
ConditionReport stochastic_nonexpansivity_probe(const ControlProblem& problem, const FeedbackSelector& selector,
                                                const ProbeConfig& config);

}  // namespace vandisc::conditions
