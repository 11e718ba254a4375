#pragma once

#include "vandisc/report.hpp"
#include "vandisc/types.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vandisc::model {

// Axis-aligned box or Euclidean ball; closed.
class Domain {
public:
    enum class Shape { box, ball };

    static Domain box(Vec lower, Vec upper);
    static Domain ball(Vec center, double radius);

    Shape shape() const { return shape_; }
    int dim() const { return static_cast<int>(lower_.size()); }
    bool contains(const Vec& x, double slack = 0.0) const;
    // Euclidean distance to the closed set; 0 inside.
    double distance(const Vec& x) const;
    Vec project(const Vec& x) const;
    // Bounding box.
    const Vec& lower() const { return lower_; }
    const Vec& upper() const { return upper_; }
    Vec center() const { return 0.5 * (lower_ + upper_); }
    double radius() const { return radius_; }
    // Maps [0,1]^N onto the bounding box, then projects into the domain.
    Vec from_unit(const Vec& unit) const;
    std::string describe() const;

private:
    Shape shape_ = Shape::box;
    Vec lower_;
    Vec upper_;
    double radius_ = 0.0;
};

struct Constants {
    double bound_M = 0.0;    // |psi(x,0,u)| <= M
    double lip_Kx = 0.0;     // Lipschitz constant of psi in x
    double lip_Kz = 0.0;     // Lipschitz constant of psi in z
    double lip_c = 0.0;      // Lipschitz constant of b and sigma
    double nonexp_c0 = 0.0;  // cost constant of the nonexpansivity condition
    double cap_M0 = 0.0;     // Hamiltonian cap, M0 >= max(c0, M)
};

using DriftFn = std::function<Vec(const Vec& x, const Vec& u)>;
using DiffusionFn = std::function<Mat(const Vec& x, const Vec& u)>;
using CostFn = std::function<double(const Vec& x, const Vec& z, const Vec& u)>;

// psi(x, z, u) = psi1(x, u) + g(z).
struct SplitForm {
    std::function<double(const Vec& x, const Vec& u)> psi1;
    std::function<double(const Vec& z)> g;
};

// Immutable after construction; safe to share across threads.
class ControlProblem {
public:
    ControlProblem(std::string name, int state_dim, int noise_dim, DriftFn drift, DiffusionFn diffusion, CostFn cost,
                   std::vector<Vec> controls, Domain domain, Constants constants, std::optional<SplitForm> split,
                   std::string canonical_text);

    const std::string& name() const { return name_; }
    int state_dim() const { return state_dim_; }
    int noise_dim() const { return noise_dim_; }
    std::size_t control_count() const { return controls_.size(); }
    const std::vector<Vec>& controls() const { return controls_; }
    const Vec& control(std::size_t index) const { return controls_.at(index); }
    const Domain& domain() const { return domain_; }
    const Constants& constants() const { return constants_; }
    const std::optional<SplitForm>& split() const { return split_; }
    // The config text the problem was built from; hashed into manifests.
    const std::string& canonical_text() const { return canonical_text_; }
    std::uint64_t hash() const;

    Vec drift(const Vec& x, std::size_t u) const { return drift_(x, controls_[u]); }
    Mat diffusion(const Vec& x, std::size_t u) const { return diffusion_(x, controls_[u]); }
    double cost(const Vec& x, const Vec& z, std::size_t u) const { return cost_(x, z, controls_[u]); }
    double cost0(const Vec& x, std::size_t u) const { return cost_(x, Vec::Zero(noise_dim_), controls_[u]); }
    // min over the control list of psi(x, 0, v).
    double min_cost0(const Vec& x) const;

    const DriftFn& drift_fn() const { return drift_; }
    const DiffusionFn& diffusion_fn() const { return diffusion_; }
    const CostFn& cost_fn() const { return cost_; }

private:
    std::string name_;
    int state_dim_;
    int noise_dim_;
    DriftFn drift_;
    DiffusionFn diffusion_;
    CostFn cost_;
    std::vector<Vec> controls_;
    Domain domain_;
    Constants constants_;
    std::optional<SplitForm> split_;
    std::string canonical_text_;
};

struct ProblemConfig {
    std::string name;
    int dimension = 0;
    int noise_dimension = 1;
    std::vector<std::string> drift;      // b1..bN
    std::vector<std::string> diffusion;  // sigma_ij, row-major N x d; empty entries mean 0
    std::string cost;                    // psi, or empty when split form is given
    std::string split_psi1;
    std::string split_g;
    std::string domain_type = "box";
    std::vector<double> lower, upper, center;
    double radius = 0.0;
    Constants constants;
    std::vector<std::vector<double>> controls;
};

// Parses the key = value config format (sections [dynamics], [cost],
// [domain], [constants], [controls]; '#' starts a comment).
ProblemConfig parse_config(std::string_view text);
ControlProblem build_problem(const ProblemConfig& config, std::string canonical_text);
ControlProblem parse_problem(std::string_view text);

std::vector<std::string> catalog_names();
// Config text of a catalog entry.
std::string builtin_config(std::string_view name);
ControlProblem builtin_problem(std::string_view name);
// Accepts "builtin:<name>" or a path to a config file.
ControlProblem load_problem(const std::string& source);

// Cost transformations used for comparison experiments.
ControlProblem shifted_cost(const ControlProblem& problem, double delta);
ControlProblem scaled_cost(const ControlProblem& problem, double factor);

// Quasi-random points of the domain from Halton coordinates starting at
// base dimension `first_dim`.
Vec quasi_random_point(const Domain& domain, std::uint64_t index, std::size_t first_dim);

// Empirical Lipschitz/bound quotients against the declared constants. The z
// sample ball has radius 10 * max(K_z, 1).
ConditionReport lipschitz_audit(const ControlProblem& problem, std::size_t sample_count, std::uint64_t seed);

}  // namespace vandisc::model
