#include "vandisc/cli.hpp"

#include "vandisc/bsde.hpp"
#include "vandisc/conditions.hpp"
#include "vandisc/format.hpp"
#include "vandisc/hjb.hpp"
#include "vandisc/limit.hpp"
#include "vandisc/model.hpp"
#include "vandisc/parallel.hpp"
#include "vandisc/representation.hpp"
#include "vandisc/sde.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace vandisc::cli {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// Condition failures are reported through the exit code, not exceptions.
struct Outcome {
    json summary;
    bool passed = true;
};

struct Common {
    std::string problem;
    std::string out = ".";
    std::uint64_t seed = 1;
    int threads = 0;
};

class Output {
public:
    explicit Output(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

    std::ofstream open(const std::string& name)
    {
        files_.push_back(name);
        std::ofstream f(dir_ / name, std::ios::binary);
        if (!f)
            throw std::runtime_error("cannot write " + (dir_ / name).string());
        return f;
    }

    void write_json(const std::string& name, const json& value)
    {
        auto f = open(name);
        f << value.dump(2) << '\n';
    }

    const std::vector<std::string>& files() const { return files_; }
    const fs::path& dir() const { return dir_; }

private:
    fs::path dir_;
    std::vector<std::string> files_;
};

std::string number(double value)
{
    char buffer[40];
    std::snprintf(buffer, sizeof buffer, "%.17g", value);
    return buffer;
}

std::vector<double> parse_doubles(const std::string& text, const std::string& flag)
{
    std::vector<double> values;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used])))
            ++used;
        if (used != item.size() || item.empty())
            throw std::invalid_argument(flag + " expects a comma-separated list of numbers");
        values.push_back(v);
    }
    if (values.empty())
        throw std::invalid_argument(flag + " must not be empty");
    return values;
}

json vec_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

model::ControlProblem load(const Common& common)
{
    if (common.problem.empty())
        throw std::invalid_argument("--problem is required");
    return model::load_problem(common.problem);
}

Vec point_or_center(const model::ControlProblem& problem, const std::string& text, const std::string& flag)
{
    if (text.empty())
        return problem.domain().center();
    const auto values = parse_doubles(text, flag);
    if (static_cast<int>(values.size()) != problem.state_dim())
        throw std::invalid_argument(flag + " needs " + std::to_string(problem.state_dim()) + " coordinates");
    Vec x(problem.state_dim());
    for (int i = 0; i < problem.state_dim(); ++i)
        x[i] = values[static_cast<std::size_t>(i)];
    if (!problem.domain().contains(x, 1e-12))
        throw std::invalid_argument(flag + " lies outside the domain");
    return x;
}

void require_positive(double value, const std::string& what)
{
    if (!(value > 0.0))
        throw std::invalid_argument(what + " must be positive");
}

void write_field_csv(std::ofstream& f, const hjb::ValueField& field)
{
    const hjb::Grid& g = field.grid;
    for (int i = 0; i < g.dim(); ++i)
        f << 'x' << (i + 1) << ',';
    f << "lambda_V,policy_index\n";
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (!g.active(k))
            continue;
        const Vec x = g.point(k);
        for (int i = 0; i < g.dim(); ++i)
            f << number(x[i]) << ',';
        f << number(field.values[k]) << ',' << field.policy[k] << '\n';
    }
}

hjb::Grid make_grid(const model::ControlProblem& problem, int grid_n)
{
    if (grid_n < 3)
        throw std::invalid_argument("--grid-n must be at least 3");
    return hjb::Grid::over(problem.domain(), grid_n);
}

// ---- subcommands ---------------------------------------------------------

struct SolveHjbArgs {
    double lambda = 1.0;
    int grid_n = 201;
    double tol = 1e-8;
    std::size_t max_iter = 10000;
};

Outcome solve_hjb(const Common& common, const SolveHjbArgs& a, Output& out)
{
    require_positive(a.lambda, "lambda");
    require_positive(a.tol, "tol");
    const auto problem = load(common);
    hjb::SolverConfig cfg;
    cfg.tol = a.tol;
    cfg.max_iter = a.max_iter;
    const auto field = hjb::solve_discounted(problem, a.lambda, make_grid(problem, a.grid_n), cfg);
    auto f = out.open("hjb_field.csv");
    write_field_csv(f, field);
    Outcome o;
    o.summary = {{"lambda", a.lambda},
                 {"grid_n", a.grid_n},
                 {"residual_norm", field.residual_norm},
                 {"iterations", field.iterations}};
    out.write_json("hjb_summary.json", o.summary);
    return o;
}

struct SweepArgs {
    std::string lambdas = "1,0.5,0.25,0.125,0.0625,0.03125";
    int grid_n = 201;
    double tol = 1e-8;
    bool richardson = false;
};

Outcome sweep_lambda(const Common& common, const SweepArgs& a, Output& out)
{
    const auto lambdas = parse_doubles(a.lambdas, "--lambdas");
    for (double l : lambdas)
        require_positive(l, "lambda");
    const auto problem = load(common);
    const auto grid = make_grid(problem, a.grid_n);
    hjb::SolverConfig cfg;
    cfg.tol = a.tol;
    const auto sweep = limit::lambda_sweep(problem, grid, lambdas, cfg, a.richardson);
    for (std::size_t k = 0; k < sweep.fields.size(); ++k) {
        auto f = out.open("field_lambda_" + std::to_string(k) + ".csv");
        write_field_csv(f, sweep.fields[k]);
    }
    auto wf = out.open("w0.csv");
    write_field_csv(wf, sweep.w0);

    const auto monotone = limit::monotonicity_check(sweep);
    const auto residual = limit::subsolution_residual(sweep, problem, 10.0 * grid.max_spacing());
    const auto constancy = limit::constancy_check(sweep, problem, 128, common.seed);
    const auto bound = limit::pointwise_cost_bound(sweep, problem);
    Outcome o;
    o.summary = {{"lambdas", lambdas},
                 {"monotone_violation", sweep.monotone_violation},
                 {"sup_gaps", sweep.sup_gaps},
                 {"extrapolated", sweep.extrapolated},
                 {"monotonicity", monotone.to_json()},
                 {"residual", residual.to_json()},
                 {"constancy", constancy.to_json()},
                 {"pointwise_cost_bound", bound.to_json()}};
    out.write_json("sweep_summary.json", o.summary);
    o.passed = monotone.passed() && residual.passed() && (constancy.not_applicable() || constancy.passed()) &&
               bound.passed();
    return o;
}

struct BsdeArgs {
    double lambda = 1.0;
    double tol = 1e-6;
    double horizon = 1.0;
    double dt = 0.01;
    std::size_t paths = 1000;
    std::string x0;
    std::size_t control = 0;
    std::size_t dump_paths = 0;
};

Outcome bsde_cmd(const Common& common, const BsdeArgs& a, Output& out)
{
    require_positive(a.lambda, "lambda");
    require_positive(a.tol, "tol");
    require_positive(a.dt, "dt");
    if (a.horizon < 0.0)
        throw std::invalid_argument("horizon must be non-negative");
    const auto problem = load(common);
    if (a.control >= problem.control_count())
        throw std::invalid_argument("--control is out of range");
    const Vec x0 = point_or_center(problem, a.x0, "--x0");
    bsde::SchemeConfig cfg;
    cfg.dt = a.dt;
    cfg.path_count = a.paths;
    cfg.seed = common.seed;
    const auto policy = sde::constant_policy(a.control);
    const auto path = bsde::solve_infinite_horizon(problem, x0, policy, a.lambda, a.tol, a.horizon, cfg);
    {
        auto f = out.open("bsde_path.csv");
        f << "t,y";
        for (int j = 0; j < problem.noise_dim(); ++j)
            f << ",z" << (j + 1);
        f << '\n';
        for (std::size_t k = 0; k < path.time_grid.size(); ++k) {
            f << number(path.time_grid[k]) << ',' << number(path.y_values[k]);
            const Vec& z = path.z_values[std::min(k, path.z_values.size() - 1)];
            for (int j = 0; j < problem.noise_dim(); ++j)
                f << ',' << number(z[j]);
            f << '\n';
        }
    }
    if (a.dump_paths > 0) {
        const auto grid = sde::uniform_grid(a.horizon, a.dt);
        for (std::size_t p = 0; p < a.dump_paths; ++p) {
            auto f = out.open("state_path_" + std::to_string(p) + ".csv");
            sde::write_path_csv(sde::simulate(problem, x0, policy, grid, common.seed, p), f);
        }
    }
    const auto bounds = bsde::y_bound_check(path, problem);
    Outcome o;
    o.summary = {{"y0", path.y_values.front()},
                 {"z0", vec_json(path.z_values.front())},
                 {"tail_error_bound", path.tail_error_bound},
                 {"std_error", path.std_error},
                 {"truncation_horizon", path.truncation_horizon},
                 {"bounds", bounds.to_json()}};
    out.write_json("bsde_summary.json", o.summary);
    o.passed = bounds.passed();
    return o;
}

struct ConditionsArgs {
    std::size_t pairs = 1000;
    std::size_t z_samples = 32;
    int selector_res = 21;
    double slack = 1e-12;
    bool skip_probe = false;
    double lambda = 1.0;
    double epsilon = 0.05;
    std::size_t paths = 2000;
    std::size_t gammas = 8;
    std::size_t probe_pairs = 4;
    std::size_t radial_samples = 200;
};

Outcome check_conditions(const Common& common, const ConditionsArgs& a, Output& out)
{
    require_positive(a.lambda, "lambda");
    require_positive(a.epsilon, "epsilon");
    const auto problem = load(common);
    const auto nonexp = conditions::nonexpansivity_check(problem, a.pairs, a.z_samples, common.seed);
    const auto radial =
        limit::radial_monotonicity_check(problem, a.radial_samples, hjb::default_l_grid(), common.seed);
    Outcome o;
    o.summary = {{"h3", nonexp.report.to_json()}, {"radial", radial.to_json()}};
    bool passed = nonexp.report.passed() && radial.passed();
    if (nonexp.report.passed()) {
        try {
            const auto selector = conditions::FeedbackSelector::build(problem, a.selector_res, a.slack, a.z_samples);
            o.summary["selector"] = {{"resolution", selector.resolution()},
                                     {"lattice_points", selector.lattice_points()},
                                     {"max_g", selector.max_g()},
                                     {"max_psi_tilde", selector.max_psi_tilde()},
                                     {"switched_fraction", selector.switched_fraction()}};
            if (!a.skip_probe) {
                conditions::ProbeConfig cfg;
                cfg.lambda = a.lambda;
                cfg.epsilon = a.epsilon;
                cfg.path_count = a.paths;
                cfg.gamma_count = a.gammas;
                cfg.pair_count = a.probe_pairs;
                cfg.seed = common.seed;
                const auto probe = conditions::stochastic_nonexpansivity_probe(problem, selector, cfg);
                o.summary["h4"] = probe.to_json();
                passed = passed && probe.passed();
            }
        } catch (const conditions::SelectorError& e) {
            o.summary["selector"] = {{"error", e.what()}};
            passed = false;
        }
    } else {
        o.summary["selector"] = {{"error", "not built: nonexpansivity check failed"}};
    }
    out.write_json("conditions.json", o.summary);
    o.passed = passed;
    return o;
}

struct RepresentArgs {
    std::string x;
    double t_max = 0.0;
    std::size_t t_grid_n = 13;
    double dt = 0.02;
    std::size_t paths = 1000;
    std::string lambdas = "1,0.5,0.25,0.125,0.0625,0.03125";
    int grid_n = 201;
    std::size_t nodes = 9;
};

Outcome represent(const Common& common, const RepresentArgs& a, Output& out)
{
    require_positive(a.dt, "dt");
    if (a.t_max < 0.0)
        throw std::invalid_argument("tmax must be non-negative");
    const auto problem = load(common);
    representation::effective_split(problem);
    const double t_max = a.t_max > 0.0 ? a.t_max : representation::default_t_max(problem, common.seed);
    const auto t_grid = representation::t_grid(t_max, a.t_grid_n);
    representation::MonteCarloConfig cfg;
    cfg.dt = a.dt;
    cfg.path_count = a.paths;
    cfg.seed = common.seed;
    Outcome o;
    if (a.x == "grid") {
        const auto lambdas = parse_doubles(a.lambdas, "--lambdas");
        const auto sweep = limit::lambda_sweep(problem, make_grid(problem, a.grid_n), lambdas);
        const auto report = representation::representation_crosscheck(sweep, problem, a.nodes, t_grid, cfg);
        o.summary = {{"t_max", t_max}, {"t_grid_n", t_grid.size()}, {"crosscheck", report.to_json()}};
        o.passed = report.passed();
    } else {
        const Vec x = point_or_center(problem, a.x, "--x");
        const auto r = representation::representation_value(problem, x, t_grid,
                                                            representation::policy_family(problem), cfg);
        json cells = json::array();
        for (const auto& c : r.cells)
            cells.push_back({{"t", c.t}, {"policy", c.policy}, {"value", c.value}, {"std_error", c.std_error}});
        o.summary = {{"x", vec_json(x)},
                     {"value", r.value},
                     {"std_error", r.std_error},
                     {"argmin_t", r.argmin_t},
                     {"argmin_policy", r.policy_name},
                     {"tail_allowance", r.tail_allowance},
                     {"tail_note", r.tail_note},
                     {"tolerances", {{"three_se", 3.0 * r.std_error}, {"tail", r.tail_allowance}}},
                     {"cells", cells}};
    }
    out.write_json("representation.json", o.summary);
    return o;
}

struct DppArgs {
    double lambda = 1.0;
    std::string times = "0.25,0.5";
    int grid_n = 101;
    double dt = 0.01;
    std::size_t paths = 500;
    std::size_t node_stride = 1;
    double tol = 1e-8;
};

Outcome dpp_check(const Common& common, const DppArgs& a, Output& out)
{
    require_positive(a.lambda, "lambda");
    require_positive(a.dt, "dt");
    const auto times = parse_doubles(a.times, "--t");
    const auto problem = load(common);
    hjb::SolverConfig solver;
    solver.tol = a.tol;
    const auto field = hjb::solve_discounted(problem, a.lambda, make_grid(problem, a.grid_n), solver);
    const auto family = representation::policy_family(problem, &field);
    representation::MonteCarloConfig cfg;
    cfg.dt = a.dt;
    cfg.path_count = a.paths;
    cfg.seed = common.seed;
    Outcome o;
    o.summary = {{"lambda", a.lambda}, {"reports", json::array()}};
    for (double t : times) {
        const auto report = representation::dpp_residual(problem, field, t, family, cfg, a.node_stride);
        o.summary["reports"].push_back({{"t", t}, {"report", report.to_json()}});
        o.passed = o.passed && report.passed();
    }
    out.write_json("dpp.json", o.summary);
    return o;
}

struct AuditArgs {
    std::size_t samples = 2000;
    std::size_t paths = 20;
    double horizon = 2.0;
    double dt = 0.01;
};

Outcome audit(const Common& common, const AuditArgs& a, Output& out)
{
    const auto problem = load(common);
    const auto lipschitz = model::lipschitz_audit(problem, a.samples, common.seed);
    const auto inv = sde::invariance_check(problem, a.paths, a.horizon, a.dt, common.seed);
    const double inv_tol = 10.0 * a.dt;
    Outcome o;
    o.summary = {{"lipschitz", lipschitz.to_json()},
                 {"invariance",
                  {{"sample_count", inv.sample_count},
                   {"max_excursion", inv.max_excursion},
                   {"tolerance", inv_tol},
                   {"violating_seed", inv.violating_seed ? json(*inv.violating_seed) : json(nullptr)},
                   {"violating_path", inv.violating_path ? json(*inv.violating_path) : json(nullptr)}}}};
    if (inv.violating_state)
        o.summary["invariance"]["violating_state"] = vec_json(*inv.violating_state);
    out.write_json("audit.json", o.summary);
    o.passed = lipschitz.passed() && inv.max_excursion <= inv_tol;
    return o;
}

std::string hex(std::uint64_t value)
{
    char buffer[20];
    std::snprintf(buffer, sizeof buffer, "%016llx", static_cast<unsigned long long>(value));
    return buffer;
}

int default_threads()
{
    if (const char* env = std::getenv("VANDISC_THREADS")) {
        try {
            return std::max(0, std::stoi(env));
        } catch (const std::exception&) {
            return 0;
        }
    }
    return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"vandisc: discounted control, vanishing-discount limits and g-expectation checks"};
    app.set_version_flag("--version", VANDISC_VERSION);
    app.require_subcommand(1);

    Common common;
    common.threads = default_threads();
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--problem", common.problem, "builtin:<name> or a config file path");
        sub->add_option("--out", common.out, "output directory")->capture_default_str();
        sub->add_option("--seed", common.seed, "random seed")->capture_default_str();
        sub->add_option("--threads", common.threads, "worker threads (0: runtime default; env VANDISC_THREADS)");
    };

    SolveHjbArgs hjb_args;
    auto* hjb_cmd = app.add_subcommand("solve-hjb", "solve the discounted HJB equation on a grid");
    add_common(hjb_cmd);
    hjb_cmd->add_option("--lambda", hjb_args.lambda)->capture_default_str();
    hjb_cmd->add_option("--grid-n", hjb_args.grid_n)->capture_default_str();
    hjb_cmd->add_option("--tol", hjb_args.tol)->capture_default_str();
    hjb_cmd->add_option("--max-iter", hjb_args.max_iter)->capture_default_str();

    SweepArgs sweep_args;
    auto* sweep_cmd = app.add_subcommand("sweep-lambda", "vanishing-discount sweep and limit checks");
    add_common(sweep_cmd);
    sweep_cmd->add_option("--lambdas", sweep_args.lambdas, "comma list, strictly decreasing")->capture_default_str();
    sweep_cmd->add_option("--grid-n", sweep_args.grid_n)->capture_default_str();
    sweep_cmd->add_option("--tol", sweep_args.tol)->capture_default_str();
    sweep_cmd->add_flag("--richardson", sweep_args.richardson, "extrapolate w0 from the last two fields");

    BsdeArgs bsde_args;
    auto* bsde_sub = app.add_subcommand("bsde", "infinite-horizon BSDE under a constant control");
    add_common(bsde_sub);
    bsde_sub->add_option("--lambda", bsde_args.lambda)->capture_default_str();
    bsde_sub->add_option("--tol", bsde_args.tol, "truncation tolerance")->capture_default_str();
    bsde_sub->add_option("--horizon", bsde_args.horizon, "output horizon T")->capture_default_str();
    bsde_sub->add_option("--dt", bsde_args.dt)->capture_default_str();
    bsde_sub->add_option("--paths", bsde_args.paths)->capture_default_str();
    bsde_sub->add_option("--x0", bsde_args.x0, "start point, default the domain center");
    bsde_sub->add_option("--control", bsde_args.control)->capture_default_str();
    bsde_sub->add_option("--dump-paths", bsde_args.dump_paths, "write this many state paths as CSV");

    ConditionsArgs cond_args;
    auto* cond_cmd = app.add_subcommand("check-conditions", "nonexpansivity, selector, stochastic probe, radial monotonicity");
    add_common(cond_cmd);
    cond_cmd->add_option("--pairs", cond_args.pairs)->capture_default_str();
    cond_cmd->add_option("--z-samples", cond_args.z_samples)->capture_default_str();
    cond_cmd->add_option("--selector-res", cond_args.selector_res)->capture_default_str();
    cond_cmd->add_option("--slack", cond_args.slack)->capture_default_str();
    cond_cmd->add_flag("--skip-probe", cond_args.skip_probe);
    cond_cmd->add_option("--lambda", cond_args.lambda)->capture_default_str();
    cond_cmd->add_option("--epsilon", cond_args.epsilon)->capture_default_str();
    cond_cmd->add_option("--paths", cond_args.paths)->capture_default_str();
    cond_cmd->add_option("--gammas", cond_args.gammas)->capture_default_str();
    cond_cmd->add_option("--probe-pairs", cond_args.probe_pairs)->capture_default_str();
    cond_cmd->add_option("--radial-samples", cond_args.radial_samples)->capture_default_str();

    RepresentArgs rep_args;
    auto* rep_cmd = app.add_subcommand("represent", "g-expectation representation of the limit");
    add_common(rep_cmd);
    rep_cmd->add_option("--x", rep_args.x, "point, or \"grid\" for the crosscheck at sampled nodes");
    rep_cmd->add_option("--tmax", rep_args.t_max, "0: automatic")->capture_default_str();
    rep_cmd->add_option("--tgrid-n", rep_args.t_grid_n)->capture_default_str();
    rep_cmd->add_option("--dt", rep_args.dt)->capture_default_str();
    rep_cmd->add_option("--paths", rep_args.paths)->capture_default_str();
    rep_cmd->add_option("--lambdas", rep_args.lambdas, "sweep used with --x grid")->capture_default_str();
    rep_cmd->add_option("--grid-n", rep_args.grid_n)->capture_default_str();
    rep_cmd->add_option("--nodes", rep_args.nodes)->capture_default_str();

    DppArgs dpp_args;
    auto* dpp_cmd = app.add_subcommand("dpp-check", "dynamic programming residual of a solved field");
    add_common(dpp_cmd);
    dpp_cmd->add_option("--lambda", dpp_args.lambda)->capture_default_str();
    dpp_cmd->add_option("--t", dpp_args.times, "comma list of times")->capture_default_str();
    dpp_cmd->add_option("--grid-n", dpp_args.grid_n)->capture_default_str();
    dpp_cmd->add_option("--dt", dpp_args.dt)->capture_default_str();
    dpp_cmd->add_option("--paths", dpp_args.paths)->capture_default_str();
    dpp_cmd->add_option("--node-stride", dpp_args.node_stride)->capture_default_str();
    dpp_cmd->add_option("--tol", dpp_args.tol)->capture_default_str();

    AuditArgs audit_args;
    auto* audit_cmd = app.add_subcommand("audit", "declared constants and domain invariance");
    add_common(audit_cmd);
    audit_cmd->add_option("--samples", audit_args.samples)->capture_default_str();
    audit_cmd->add_option("--paths", audit_args.paths)->capture_default_str();
    audit_cmd->add_option("--horizon", audit_args.horizon)->capture_default_str();
    audit_cmd->add_option("--dt", audit_args.dt)->capture_default_str();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::Success& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kExitError;
    }

    parallel::set_threads(common.threads);
    const auto start = std::chrono::steady_clock::now();
    CLI::App* chosen = app.get_subcommands().front();
    try {
        Output output(common.out);
        Outcome outcome;
        const std::string name = chosen->get_name();
        if (chosen == hjb_cmd)
            outcome = solve_hjb(common, hjb_args, output);
        else if (chosen == sweep_cmd)
            outcome = sweep_lambda(common, sweep_args, output);
        else if (chosen == bsde_sub)
            outcome = bsde_cmd(common, bsde_args, output);
        else if (chosen == cond_cmd)
            outcome = check_conditions(common, cond_args, output);
        else if (chosen == rep_cmd)
            outcome = represent(common, rep_args, output);
        else if (chosen == dpp_cmd)
            outcome = dpp_check(common, dpp_args, output);
        else
            outcome = audit(common, audit_args, output);

        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const auto problem = model::load_problem(common.problem);
        json flags = json::object();
        for (const CLI::Option* opt : chosen->get_options()) {
            if (opt->get_name() == "--help")
                continue;
            flags[opt->get_name()] = opt->as<std::string>();
        }
        json manifest = {{"subcommand", name},
                         {"argv", args},
                         {"flags", flags},
                         {"problem", common.problem},
                         {"problem_name", problem.name()},
                         {"problem_hash", hex(problem.hash())},
                         {"seed", common.seed},
                         {"threads", parallel::max_threads()},
                         {"version", VANDISC_VERSION},
                         {"wall_clock_seconds", seconds},
                         {"status", outcome.passed ? "pass" : "condition_failed"},
                         {"outputs", output.files()}};
        {
            std::ofstream f(output.dir() / "manifest.json", std::ios::binary);
            f << manifest.dump(2) << '\n';
        }
        out << outcome.summary.dump(2) << '\n';
        return outcome.passed ? kExitPass : kExitConditionFailed;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitError;
    }
}

int run(int argc, char** argv)
{
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i)
        args.emplace_back(argv[i]);
    return run(args, std::cout, std::cerr);
}

}  // namespace vandisc::cli
