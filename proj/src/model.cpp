#include "vandisc/model.hpp"

#include "vandisc/expression.hpp"
#include "vandisc/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace vandisc::model {
namespace {

std::string trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos)
        return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(std::string_view s, char sep)
{
    std::vector<std::string> parts;
    std::size_t start = 0;
    for (;;) {
        const auto end = s.find(sep, start);
        parts.push_back(trim(s.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start)));
        if (end == std::string_view::npos)
            return parts;
        start = end + 1;
    }
}

double parse_double(const std::string& text, const std::string& key)
{
    std::size_t used = 0;
    double value = 0.0;
    try {
        value = std::stod(text, &used);
    } catch (const std::exception&) {
        throw std::invalid_argument("config: '" + key + "' expects a number, got '" + text + "'");
    }
    if (used != text.size())
        throw std::invalid_argument("config: '" + key + "' expects a number, got '" + text + "'");
    return value;
}

int parse_int(const std::string& text, const std::string& key)
{
    const double value = parse_double(text, key);
    if (value != std::floor(value) || value < 0 || value > 64)
        throw std::invalid_argument("config: '" + key + "' expects a small non-negative integer");
    return static_cast<int>(value);
}

std::vector<double> parse_list(const std::string& text, const std::string& key)
{
    std::vector<double> values;
    for (const auto& part : split(text, ','))
        values.push_back(parse_double(part, key));
    return values;
}

Vec to_vec(const std::vector<double>& values)
{
    Vec v(static_cast<Eigen::Index>(values.size()));
    for (std::size_t i = 0; i < values.size(); ++i)
        v[static_cast<Eigen::Index>(i)] = values[i];
    return v;
}

Expression compile_key(const std::string& key, const std::string& text, VariableDims dims)
{
    try {
        return Expression::parse(text, dims);
    } catch (const ParseError& e) {
        throw ParseError(e.kind(), e.position(), "in '" + key + "': " + e.detail());
    }
}

const std::map<std::string, std::string, std::less<>>& catalog()
{
    static const std::map<std::string, std::string, std::less<>> entries = {
        {"example_2_3", R"(name = example_2_3
dimension = 1
noise_dimension = 1

[dynamics]
b1 = -3*x1
sigma11 = x1

[cost]
psi = z1

[domain]
type = box
lower = -1
upper = 1

[constants]
M = 0
K_x = 0
K_z = 1
c = 3
c0 = 1
M0 = 1

[controls]
values = 0
)"},
        {"constant_cost", R"(name = constant_cost
dimension = 1
noise_dimension = 1

[dynamics]
b1 = 0
sigma11 = 0

[cost]
psi = 1

[domain]
type = box
lower = -1
upper = 1

[constants]
M = 1
K_x = 0
K_z = 0
c = 0
c0 = 1
M0 = 1

[controls]
values = 0
)"},
        {"decay_quadratic", R"(name = decay_quadratic
dimension = 1
noise_dimension = 1

[dynamics]
b1 = -u1*x1
sigma11 = 0

[cost]
psi = x1^2

[domain]
type = box
lower = -1
upper = 1

[constants]
M = 1
K_x = 2
K_z = 0
c = 1
c0 = 2
M0 = 2

[controls]
values = 0.5; 1
)"},
        // u = 0 stops the flow, which gives radial monotonicity.
        {"split_homogeneous", R"(name = split_homogeneous
dimension = 1
noise_dimension = 1

[dynamics]
b1 = -u1*x1
sigma11 = 0

[cost]
psi1 = x1^2
g = -abs(z1)

[domain]
type = box
lower = -1
upper = 1

[constants]
M = 1
K_x = 2
K_z = 1
c = 1
c0 = 2
M0 = 2

[controls]
values = 0; 0.5; 1
)"},
        // Outward drift: fails nonexpansivity for every control pairing.
        {"expanding", R"(name = expanding
dimension = 1
noise_dimension = 1

[dynamics]
b1 = x1
sigma11 = 0

[cost]
psi = x1^2

[domain]
type = box
lower = -1
upper = 1

[constants]
M = 1
K_x = 2
K_z = 0
c = 1
c0 = 2
M0 = 2

[controls]
values = 0
)"},
        // Diffusion positive in the interior, vanishing on the boundary.
        {"elliptic_counterexample", R"(name = elliptic_counterexample
dimension = 1
noise_dimension = 1

[dynamics]
b1 = -x1
sigma11 = 0.5*(1 - x1^2)

[cost]
psi = x1^2

[domain]
type = box
lower = -1
upper = 1

[constants]
M = 1
K_x = 2
K_z = 0
c = 1
c0 = 2
M0 = 2

[controls]
values = 0
)"},
        // Any interior point can be steered toward the zero-cost boundary.
        {"controllable", R"(name = controllable
dimension = 1
noise_dimension = 1

[dynamics]
b1 = 3*u1*(1 - x1^2)
sigma11 = 0

[cost]
psi = 1 - x1^2

[domain]
type = box
lower = -1
upper = 1

[constants]
M = 1
K_x = 2
K_z = 0
c = 6
c0 = 2
M0 = 2

[controls]
values = -1; 0; 1
)"},
        // Nonexpansive but lambda V decreases in lambda.
        {"monotone_violator", R"(name = monotone_violator
dimension = 1
noise_dimension = 1

[dynamics]
b1 = 1 - x1
sigma11 = 0

[cost]
psi = x1

[domain]
type = box
lower = 0
upper = 1

[constants]
M = 1
K_x = 1
K_z = 0
c = 1
c0 = 1
M0 = 1

[controls]
values = 0
)"},
        // Recession driver |z|.
        {"decay_softabs", R"(name = decay_softabs
dimension = 1
noise_dimension = 1

[dynamics]
b1 = -u1*x1
sigma11 = 0

[cost]
psi = x1^2 + sqrt(1 + z1^2) - 1

[domain]
type = box
lower = -1
upper = 1

[constants]
M = 1
K_x = 2
K_z = 1
c = 1
c0 = 2
M0 = 2

[controls]
values = 0.5; 1
)"},
    };
    return entries;
}

std::string format_number(double value)
{
    char buffer[40];
    std::snprintf(buffer, sizeof buffer, "%.17g", value);
    return buffer;
}

}  // namespace

// ---------------------------------------------------------------------------
// Domain

Domain Domain::box(Vec lower, Vec upper)
{
    if (lower.size() == 0 || lower.size() > kMaxDim || lower.size() != upper.size())
        throw std::invalid_argument("box bounds must have equal dimension between 1 and 3");
    for (Eigen::Index i = 0; i < lower.size(); ++i)
        if (!(lower[i] < upper[i]))
            throw std::invalid_argument("box needs lower < upper on every axis");
    Domain d;
    d.shape_ = Shape::box;
    d.lower_ = std::move(lower);
    d.upper_ = std::move(upper);
    return d;
}

Domain Domain::ball(Vec center, double radius)
{
    if (center.size() == 0 || center.size() > kMaxDim)
        throw std::invalid_argument("ball center must have dimension between 1 and 3");
    if (!(radius > 0.0))
        throw std::invalid_argument("ball radius must be positive");
    Domain d;
    d.shape_ = Shape::ball;
    d.lower_ = center.array() - radius;
    d.upper_ = center.array() + radius;
    d.radius_ = radius;
    return d;
}

bool Domain::contains(const Vec& x, double slack) const
{
    return distance(x) <= slack;
}

double Domain::distance(const Vec& x) const
{
    if (shape_ == Shape::box)
        return (x - x.cwiseMax(lower_).cwiseMin(upper_)).norm();
    return std::max(0.0, (x - center()).norm() - radius_);
}

Vec Domain::project(const Vec& x) const
{
    if (shape_ == Shape::box)
        return x.cwiseMax(lower_).cwiseMin(upper_);
    const Vec c = center();
    const double r = (x - c).norm();
    if (r <= radius_)
        return x;
    return c + (x - c) * (radius_ / r);
}

Vec Domain::from_unit(const Vec& unit) const
{
    return project(lower_.array() + unit.array() * (upper_ - lower_).array());
}

std::string Domain::describe() const
{
    std::ostringstream out;
    auto print = [&](const Vec& v) {
        out << '(';
        for (Eigen::Index i = 0; i < v.size(); ++i)
            out << (i ? ", " : "") << format_number(v[i]);
        out << ')';
    };
    if (shape_ == Shape::box) {
        out << "box ";
        print(lower_);
        out << " to ";
        print(upper_);
    } else {
        out << "ball center ";
        print(center());
        out << " radius " << format_number(radius_);
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// ControlProblem

ControlProblem::ControlProblem(std::string name, int state_dim, int noise_dim, DriftFn drift, DiffusionFn diffusion,
                               CostFn cost, std::vector<Vec> controls, Domain domain, Constants constants,
                               std::optional<SplitForm> split, std::string canonical_text)
    : name_(std::move(name)),
      state_dim_(state_dim),
      noise_dim_(noise_dim),
      drift_(std::move(drift)),
      diffusion_(std::move(diffusion)),
      cost_(std::move(cost)),
      controls_(std::move(controls)),
      domain_(std::move(domain)),
      constants_(constants),
      split_(std::move(split)),
      canonical_text_(std::move(canonical_text))
{
    if (state_dim_ < 1 || state_dim_ > kMaxDim || noise_dim_ < 1 || noise_dim_ > kMaxDim)
        throw std::invalid_argument("state and noise dimensions must be between 1 and 3");
    if (domain_.dim() != state_dim_)
        throw std::invalid_argument("domain dimension differs from state dimension");
    if (controls_.empty())
        throw std::invalid_argument("control list is empty");
    if (controls_.size() > 255)
        throw std::invalid_argument("at most 255 controls are supported");
    for (const auto& u : controls_)
        if (u.size() != controls_.front().size() || u.size() > kMaxDim)
            throw std::invalid_argument("controls must share one dimension of at most 3");
    const Constants& k = constants_;
    for (double value : {k.bound_M, k.lip_Kx, k.lip_Kz, k.lip_c})
        if (!(value >= 0.0))
            throw std::invalid_argument("constants M, K_x, K_z, c must be non-negative");
    if (!(k.nonexp_c0 > 0.0) || !(k.cap_M0 > 0.0))
        throw std::invalid_argument("constants c0 and M0 must be positive");
    if (k.cap_M0 < std::max(k.nonexp_c0, k.bound_M))
        throw std::invalid_argument("M0 must be at least max(c0, M)");
}

std::uint64_t ControlProblem::hash() const
{
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : canonical_text_) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

double ControlProblem::min_cost0(const Vec& x) const
{
    const Vec zero = Vec::Zero(noise_dim_);
    double best = cost_(x, zero, controls_[0]);
    for (std::size_t u = 1; u < controls_.size(); ++u)
        best = std::min(best, cost_(x, zero, controls_[u]));
    return best;
}

// ---------------------------------------------------------------------------
// Config parsing

ProblemConfig parse_config(std::string_view text)
{
    ProblemConfig config;
    std::map<std::string, std::string> dynamics, cost, domain, constants, controls;
    std::map<std::string, std::string>* section = nullptr;
    std::string section_name;
    bool have_dimension = false;

    std::istringstream in{std::string(text)};
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto hash_pos = raw.find('#');
        const std::string line = trim(hash_pos == std::string::npos ? raw : raw.substr(0, hash_pos));
        if (line.empty())
            continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw std::invalid_argument("config line " + std::to_string(line_no) + ": malformed section header");
            section_name = trim(line.substr(1, line.size() - 2));
            if (section_name == "dynamics")
                section = &dynamics;
            else if (section_name == "cost")
                section = &cost;
            else if (section_name == "domain")
                section = &domain;
            else if (section_name == "constants")
                section = &constants;
            else if (section_name == "controls")
                section = &controls;
            else
                throw std::invalid_argument("config line " + std::to_string(line_no) + ": unknown section [" +
                                            section_name + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw std::invalid_argument("config line " + std::to_string(line_no) + ": empty key or value");
        if (!section) {
            if (key == "name")
                config.name = value;
            else if (key == "dimension") {
                config.dimension = parse_int(value, key);
                have_dimension = true;
            } else if (key == "noise_dimension")
                config.noise_dimension = parse_int(value, key);
            else
                throw std::invalid_argument("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
            continue;
        }
        if (!section->emplace(key, value).second)
            throw std::invalid_argument("config line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }

    if (!have_dimension)
        throw std::invalid_argument("config: missing 'dimension'");
    const int n = config.dimension;
    const int d = config.noise_dimension;
    if (n < 1 || n > kMaxDim || d < 1 || d > kMaxDim)
        throw std::invalid_argument("config: dimension and noise_dimension must be between 1 and 3");
    if (config.name.empty())
        config.name = "unnamed";

    config.drift.assign(static_cast<std::size_t>(n), {});
    config.diffusion.assign(static_cast<std::size_t>(n * d), {});
    for (const auto& [key, value] : dynamics) {
        if (key.size() == 2 && key[0] == 'b' && std::isdigit(static_cast<unsigned char>(key[1]))) {
            const int i = key[1] - '1';
            if (i < 0 || i >= n)
                throw ParseError(ParseErrorKind::dimension_mismatch, 0,
                                 "drift component '" + key + "' exceeds dimension " + std::to_string(n));
            config.drift[static_cast<std::size_t>(i)] = value;
        } else if (key.size() == 7 && key.rfind("sigma", 0) == 0 && std::isdigit(static_cast<unsigned char>(key[5])) &&
                   std::isdigit(static_cast<unsigned char>(key[6]))) {
            const int i = key[5] - '1';
            const int j = key[6] - '1';
            if (i < 0 || i >= n || j < 0 || j >= d)
                throw ParseError(ParseErrorKind::dimension_mismatch, 0,
                                 "diffusion entry '" + key + "' exceeds declared dimensions " + std::to_string(n) +
                                     " x " + std::to_string(d));
            config.diffusion[static_cast<std::size_t>(i * d + j)] = value;
        } else {
            throw std::invalid_argument("config: unknown [dynamics] key '" + key + "'");
        }
    }
    for (int i = 0; i < n; ++i)
        if (config.drift[static_cast<std::size_t>(i)].empty())
            throw std::invalid_argument("config: missing drift component b" + std::to_string(i + 1));

    for (const auto& [key, value] : cost) {
        if (key == "psi")
            config.cost = value;
        else if (key == "psi1")
            config.split_psi1 = value;
        else if (key == "g")
            config.split_g = value;
        else
            throw std::invalid_argument("config: unknown [cost] key '" + key + "'");
    }
    const bool has_split = !config.split_psi1.empty() || !config.split_g.empty();
    if (has_split && (config.split_psi1.empty() || config.split_g.empty()))
        throw std::invalid_argument("config: split cost needs both psi1 and g");
    if (has_split == !config.cost.empty())
        throw std::invalid_argument("config: give either psi or the pair psi1, g");

    for (const auto& [key, value] : domain) {
        if (key == "type")
            config.domain_type = value;
        else if (key == "lower")
            config.lower = parse_list(value, key);
        else if (key == "upper")
            config.upper = parse_list(value, key);
        else if (key == "center")
            config.center = parse_list(value, key);
        else if (key == "radius")
            config.radius = parse_double(value, key);
        else
            throw std::invalid_argument("config: unknown [domain] key '" + key + "'");
    }
    if (config.domain_type != "box" && config.domain_type != "ball")
        throw std::invalid_argument("config: domain type must be box or ball");

    static const std::vector<std::string> required = {"M", "K_x", "K_z", "c", "c0", "M0"};
    for (const auto& key : required)
        if (!constants.count(key))
            throw std::invalid_argument("config: missing constant '" + key + "'");
    for (const auto& [key, value] : constants) {
        const double v = parse_double(value, key);
        if (key == "M")
            config.constants.bound_M = v;
        else if (key == "K_x")
            config.constants.lip_Kx = v;
        else if (key == "K_z")
            config.constants.lip_Kz = v;
        else if (key == "c")
            config.constants.lip_c = v;
        else if (key == "c0")
            config.constants.nonexp_c0 = v;
        else if (key == "M0")
            config.constants.cap_M0 = v;
        else
            throw std::invalid_argument("config: unknown constant '" + key + "'");
    }

    for (const auto& [key, value] : controls) {
        if (key != "values")
            throw std::invalid_argument("config: unknown [controls] key '" + key + "'");
        for (const auto& item : split(value, ';'))
            config.controls.push_back(parse_list(item, "controls"));
    }
    if (config.controls.empty())
        throw std::invalid_argument("config: [controls] values missing");
    return config;
}

ControlProblem build_problem(const ProblemConfig& config, std::string canonical_text)
{
    const int n = config.dimension;
    const int d = config.noise_dimension;
    const int k = static_cast<int>(config.controls.front().size());
    std::vector<Vec> controls;
    for (const auto& c : config.controls) {
        if (static_cast<int>(c.size()) != k || k < 1 || k > kMaxDim)
            throw std::invalid_argument("config: every control needs the same number (1 to 3) of components");
        controls.push_back(to_vec(c));
    }

    Domain domain = config.domain_type == "box" ? Domain::box(to_vec(config.lower), to_vec(config.upper))
                                                : Domain::ball(to_vec(config.center), config.radius);
    if (domain.dim() != n)
        throw ParseError(ParseErrorKind::dimension_mismatch, 0, "domain dimension differs from declared dimension");

    const VariableDims xu{n, 0, k};
    const VariableDims full{n, d, k};

    std::vector<Expression> drift;
    for (int i = 0; i < n; ++i)
        drift.push_back(compile_key("b" + std::to_string(i + 1), config.drift[static_cast<std::size_t>(i)], xu));
    std::vector<Expression> diffusion;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) {
            const std::string& text = config.diffusion[static_cast<std::size_t>(i * d + j)];
            diffusion.push_back(compile_key("sigma" + std::to_string(i + 1) + std::to_string(j + 1),
                                            text.empty() ? "0" : text, xu));
        }

    DriftFn drift_fn = [drift, n](const Vec& x, const Vec& u) {
        Vec out(n);
        for (int i = 0; i < n; ++i)
            out[i] = drift[static_cast<std::size_t>(i)].eval(as_span(x), {}, as_span(u));
        return out;
    };
    DiffusionFn diffusion_fn = [diffusion, n, d](const Vec& x, const Vec& u) {
        Mat out(n, d);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < d; ++j)
                out(i, j) = diffusion[static_cast<std::size_t>(i * d + j)].eval(as_span(x), {}, as_span(u));
        return out;
    };

    CostFn cost_fn;
    std::optional<SplitForm> split_form;
    if (!config.cost.empty()) {
        const Expression psi = compile_key("psi", config.cost, full);
        cost_fn = [psi](const Vec& x, const Vec& z, const Vec& u) { return psi.eval(x, z, u); };
    } else {
        const Expression psi1 = compile_key("psi1", config.split_psi1, xu);
        const Expression g = compile_key("g", config.split_g, VariableDims{0, d, 0});
        cost_fn = [psi1, g](const Vec& x, const Vec& z, const Vec& u) {
            return psi1.eval(as_span(x), {}, as_span(u)) + g.eval({}, as_span(z), {});
        };
        split_form = SplitForm{
            [psi1](const Vec& x, const Vec& u) { return psi1.eval(as_span(x), {}, as_span(u)); },
            [g](const Vec& z) { return g.eval({}, as_span(z), {}); },
        };
    }

    return ControlProblem(config.name, n, d, std::move(drift_fn), std::move(diffusion_fn), std::move(cost_fn),
                          std::move(controls), std::move(domain), config.constants, std::move(split_form),
                          std::move(canonical_text));
}

ControlProblem parse_problem(std::string_view text)
{
    return build_problem(parse_config(text), std::string(text));
}

std::vector<std::string> catalog_names()
{
    std::vector<std::string> names;
    for (const auto& [name, text] : catalog())
        names.push_back(name);
    return names;
}

std::string builtin_config(std::string_view name)
{
    const auto it = catalog().find(name);
    if (it == catalog().end())
        throw std::invalid_argument("unknown builtin problem '" + std::string(name) + "'");
    return it->second;
}

ControlProblem builtin_problem(std::string_view name)
{
    return parse_problem(builtin_config(name));
}

ControlProblem load_problem(const std::string& source)
{
    constexpr std::string_view prefix = "builtin:";
    if (source.rfind(prefix, 0) == 0)
        return builtin_problem(std::string_view(source).substr(prefix.size()));
    std::ifstream in(source);
    if (!in)
        throw std::runtime_error("cannot read problem config '" + source + "'");
    std::ostringstream text;
    text << in.rdbuf();
    return parse_problem(text.str());
}

ControlProblem shifted_cost(const ControlProblem& problem, double delta)
{
    Constants k = problem.constants();
    k.bound_M += std::abs(delta);
    k.cap_M0 = std::max(k.cap_M0, std::max(k.nonexp_c0, k.bound_M));
    CostFn cost = [base = problem.cost_fn(), delta](const Vec& x, const Vec& z, const Vec& u) {
        return base(x, z, u) + delta;
    };
    std::optional<SplitForm> split;
    if (problem.split())
        split = SplitForm{[psi1 = problem.split()->psi1, delta](const Vec& x, const Vec& u) { return psi1(x, u) + delta; },
                          problem.split()->g};
    return ControlProblem(problem.name() + "+shift", problem.state_dim(), problem.noise_dim(), problem.drift_fn(),
                          problem.diffusion_fn(), std::move(cost), problem.controls(), problem.domain(), k,
                          std::move(split), problem.canonical_text() + "\n# cost shift " + format_number(delta) + "\n");
}

ControlProblem scaled_cost(const ControlProblem& problem, double factor)
{
    if (!(factor > 0.0))
        throw std::invalid_argument("cost scale factor must be positive");
    Constants k = problem.constants();
    k.bound_M *= factor;
    k.lip_Kx *= factor;
    k.lip_Kz *= factor;
    k.nonexp_c0 *= factor;
    k.cap_M0 = std::max(k.cap_M0 * factor, std::max(k.nonexp_c0, k.bound_M));
    CostFn cost = [base = problem.cost_fn(), factor](const Vec& x, const Vec& z, const Vec& u) {
        return factor * base(x, z, u);
    };
    std::optional<SplitForm> split;
    if (problem.split())
        split = SplitForm{
            [psi1 = problem.split()->psi1, factor](const Vec& x, const Vec& u) { return factor * psi1(x, u); },
            [g = problem.split()->g, factor](const Vec& z) { return factor * g(z); }};
    return ControlProblem(problem.name() + "*scale", problem.state_dim(), problem.noise_dim(), problem.drift_fn(),
                          problem.diffusion_fn(), std::move(cost), problem.controls(), problem.domain(), k,
                          std::move(split), problem.canonical_text() + "\n# cost scale " + format_number(factor) + "\n");
}

// ---------------------------------------------------------------------------
// Audit

Vec quasi_random_point(const Domain& domain, std::uint64_t index, std::size_t first_dim)
{
    Vec unit(domain.dim());
    for (int i = 0; i < domain.dim(); ++i)
        unit[i] = rng::halton(index, rng::halton_base(first_dim + static_cast<std::size_t>(i)));
    return domain.from_unit(unit);
}

namespace {

// Point of the Euclidean ball of the given radius from Halton coordinates.
Vec quasi_random_ball(int dim, double radius, std::uint64_t index, std::size_t first_dim)
{
    Vec v(dim);
    for (int i = 0; i < dim; ++i)
        v[i] = radius * (2.0 * rng::halton(index, rng::halton_base(first_dim + static_cast<std::size_t>(i))) - 1.0);
    const double r = v.norm();
    if (r > radius)
        v *= radius / r;
    return v;
}

std::string describe_point(const char* label, const Vec& v)
{
    std::string out = std::string(label) + "=(";
    for (Eigen::Index i = 0; i < v.size(); ++i)
        out += (i ? ", " : "") + format_number(v[i]);
    return out + ")";
}

struct Worst {
    double value = 0.0;
    std::string witness;
    void offer(double candidate, const std::function<std::string()>& describe)
    {
        if (candidate > value || std::isnan(candidate)) {
            value = candidate;
            witness = describe();
        }
    }
};

}  // namespace

ConditionReport lipschitz_audit(const ControlProblem& problem, std::size_t sample_count, std::uint64_t seed)
{
    if (sample_count < 1)
        throw std::invalid_argument("lipschitz_audit needs sample_count >= 1");
    ConditionReport report("lipschitz_audit:" + problem.name());
    const Constants& k = problem.constants();
    const int n = problem.state_dim();
    const int d = problem.noise_dim();
    const double z_radius = 10.0 * std::max(k.lip_Kz, 1.0);
    const auto dn = static_cast<std::size_t>(n);
    const auto dd = static_cast<std::size_t>(d);
    // The seed rotates the Halton sequence so distinct seeds audit distinct points.
    const std::uint64_t offset = 1 + (seed % 1000003u);

    Worst bound_m, quot_kx, quot_kz, quot_c;
    for (std::size_t s = 0; s < sample_count; ++s) {
        const std::uint64_t index = offset + s;
        const Vec x = quasi_random_point(problem.domain(), index, 0);
        const Vec xp = quasi_random_point(problem.domain(), index, dn);
        const Vec z = quasi_random_ball(d, z_radius, index, 2 * dn);
        const Vec zp = quasi_random_ball(d, z_radius, index, 2 * dn + dd);
        const std::size_t u = s % problem.control_count();
        auto witness = [&] {
            return describe_point("x", x) + " " + describe_point("x'", xp) + " " + describe_point("z", z) + " " +
                   describe_point("z'", zp) + " u=" + std::to_string(u);
        };

        bound_m.offer(std::abs(problem.cost0(x, u)), witness);
        const double dx = (x - xp).norm();
        const double dz = (z - zp).norm();
        if (dx > 0.0) {
            quot_kx.offer(std::abs(problem.cost(x, z, u) - problem.cost(xp, z, u)) / dx, witness);
            const double db = (problem.drift(x, u) - problem.drift(xp, u)).norm();
            const double ds = (problem.diffusion(x, u) - problem.diffusion(xp, u)).norm();
            quot_c.offer(std::max(db, ds) / dx, witness);
        }
        if (dz > 0.0)
            quot_kz.offer(std::abs(problem.cost(x, z, u) - problem.cost(x, zp, u)) / dz, witness);
    }

    auto require = [&](const std::string& name, const Worst& worst, double declared) {
        report.require(name, worst.value, declared * (1.0 + 1e-9) + 1e-12, worst.witness);
    };
    require("M", bound_m, k.bound_M);
    require("K_x", quot_kx, k.lip_Kx);
    require("K_z", quot_kz, k.lip_Kz);
    require("c", quot_c, k.lip_c);

    if (const auto& split = problem.split()) {
        Worst g_zero, homogeneity, concavity, g_lip, consistency;
        g_zero.offer(std::abs(split->g(Vec::Zero(d))), [] { return std::string("z=0"); });
        static constexpr double kScales[] = {0.0, 0.5, 1.0, 2.0, 7.0};
        static constexpr double kWeights[] = {0.25, 0.5, 0.75};
        for (std::size_t s = 0; s < sample_count; ++s) {
            const std::uint64_t index = offset + s;
            const Vec z = quasi_random_ball(d, z_radius, index, 0);
            const Vec zp = quasi_random_ball(d, z_radius, index, dd);
            const Vec x = quasi_random_point(problem.domain(), index, 2 * dd);
            const std::size_t u = s % problem.control_count();
            const double gz = split->g(z);
            for (double t : kScales) {
                const double relative = std::abs(split->g(t * z) - t * gz) / std::max(1.0, std::abs(t * gz));
                homogeneity.offer(relative, [&] { return describe_point("z", z) + " t=" + format_number(t); });
            }
            for (double kappa : kWeights) {
                const double gap = kappa * gz + (1 - kappa) * split->g(zp) - split->g(kappa * z + (1 - kappa) * zp);
                concavity.offer(gap, [&] {
                    return describe_point("z", z) + " " + describe_point("z'", zp) + " kappa=" + format_number(kappa);
                });
            }
            const double dz = (z - zp).norm();
            if (dz > 0.0)
                g_lip.offer(std::abs(gz - split->g(zp)) / dz,
                            [&] { return describe_point("z", z) + " " + describe_point("z'", zp); });
            consistency.offer(std::abs(problem.cost(x, z, u) - split->psi1(x, problem.control(u)) - gz),
                              [&] { return describe_point("x", x) + " " + describe_point("z", z); });
        }
        report.require("split.g(0)", g_zero.value, 0.0, g_zero.witness);
        report.require("split.homogeneity", homogeneity.value, 1e-12, homogeneity.witness);
        report.require("split.concavity", concavity.value, 1e-12, concavity.witness);
        require("split.g_lipschitz", g_lip, k.lip_Kz);
        report.require("split.consistency", consistency.value, 1e-12, consistency.witness);
    }
    return report;
}

}  // namespace vandisc::model
