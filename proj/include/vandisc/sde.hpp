#pragma once

#include "vandisc/model.hpp"
#include "vandisc/types.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

namespace vandisc::sde {

using model::ControlProblem;

// Step-function policy: control index for the step starting at (t, x).
using Policy = std::function<std::size_t(double t, const Vec& x)>;

Policy constant_policy(std::size_t control_index);

// Uniform grid on [0, horizon] whose step is the largest value <= dt that
// divides the horizon.
std::vector<double> uniform_grid(double horizon, double dt);
// Throws unless the grid starts at 0 and strictly increases.
void validate_grid(const std::vector<double>& grid);

struct StatePath {
    std::vector<double> time_grid;
    std::vector<Vec> states;                  // one per grid time
    std::vector<std::size_t> control_trace;   // one per step
    std::uint64_t seed = 0;
    std::uint64_t path_index = 0;
};

// Brownian increment over step `step` of path `path`: sqrt(dt) * N(0, I_d).
Vec brownian_increment(std::uint64_t seed, std::uint64_t path, std::uint64_t step, int noise_dim, double dt);

// One Euler-Maruyama step without projection.
Vec euler_step(const ControlProblem& problem, const Vec& x, std::size_t u, double dt, const Vec& dw);

// Euler-Maruyama with projection onto the closed domain after each step.
StatePath simulate(const ControlProblem& problem, const Vec& x0, const Policy& policy,
                   const std::vector<double>& time_grid, std::uint64_t seed, std::uint64_t path_index = 0,
                   bool project = true);

struct InvarianceReport {
    std::size_t sample_count = 0;
    double max_excursion = 0.0;
    std::optional<std::uint64_t> violating_seed;
    std::optional<std::uint64_t> violating_path;
    std::optional<Vec> violating_state;
};

// Unprojected simulation from boundary and interior starts under every
// constant control and a random switching policy.
InvarianceReport invariance_check(const ControlProblem& problem, std::size_t path_count, double horizon, double dt,
                                  std::uint64_t seed);

// CSV columns t, x1..xN, u-index; the last row repeats the final control.
void write_path_csv(const StatePath& path, std::ostream& out);

// States, cumulative Brownian motion, increments and controls for a block
// of steps of a path cloud. Layout is step-major, then path, then component.
struct CloudSegment {
    std::size_t path_count = 0;
    int state_dim = 0;
    int noise_dim = 0;
    std::size_t first_step = 0;
    std::size_t steps = 0;
    std::vector<double> states;      // (steps + 1) * path_count * state_dim
    std::vector<double> brownian;    // (steps + 1) * path_count * noise_dim
    std::vector<double> increments;  // steps * path_count * noise_dim
    std::vector<std::uint8_t> controls;  // steps * path_count

    void resize(std::size_t paths, int n, int d, std::size_t first, std::size_t count);
    double* state(std::size_t local_step, std::size_t path)
    {
        return states.data() + (local_step * path_count + path) * static_cast<std::size_t>(state_dim);
    }
    const double* state(std::size_t local_step, std::size_t path) const
    {
        return states.data() + (local_step * path_count + path) * static_cast<std::size_t>(state_dim);
    }
    double* w(std::size_t local_step, std::size_t path)
    {
        return brownian.data() + (local_step * path_count + path) * static_cast<std::size_t>(noise_dim);
    }
    const double* w(std::size_t local_step, std::size_t path) const
    {
        return brownian.data() + (local_step * path_count + path) * static_cast<std::size_t>(noise_dim);
    }
    const double* dw(std::size_t local_step, std::size_t path) const
    {
        return increments.data() + (local_step * path_count + path) * static_cast<std::size_t>(noise_dim);
    }
    std::uint8_t control(std::size_t local_step, std::size_t path) const
    {
        return controls[local_step * path_count + path];
    }
};

namespace kernels {

// Fills steps 1..steps of the segment from its step-0 states and Brownian
// values. Both variants produce bitwise-identical segments.
void advance_cloud_serial(const ControlProblem& problem, const Policy& policy, const std::vector<double>& grid,
                          std::uint64_t seed, CloudSegment& segment);
void advance_cloud_parallel(const ControlProblem& problem, const Policy& policy, const std::vector<double>& grid,
                            std::uint64_t seed, CloudSegment& segment);

}  // namespace kernels

}  // namespace vandisc::sde
