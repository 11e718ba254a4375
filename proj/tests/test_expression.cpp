#include "vandisc/expression.hpp"
#include "vandisc/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <string>

using namespace vandisc;
using model::Expression;
using model::ParseError;
using model::ParseErrorKind;
using model::VarKind;

namespace {

const model::VariableDims kDims{2, 1, 1};

double eval(const std::string& text, std::initializer_list<double> x, std::initializer_list<double> z = {0.0},
            std::initializer_list<double> u = {0.0})
{
    return Expression::parse(text, kDims).eval(vec_of(x), vec_of(z), vec_of(u));
}

ParseError parse_error(const std::string& text)
{
    try {
        Expression::parse(text, kDims);
    } catch (const ParseError& e) {
        return e;
    }
    FAIL("expected a parse error for " << text);
    return ParseError(ParseErrorKind::syntax, 0, "");
}

// Random trees over the full grammar; literals are non-negative because the
// parser reads a leading minus as negation.
Expression random_tree(std::uint64_t seed, std::uint64_t& counter, int depth)
{
    auto draw = [&] { return rng::uniform(seed, rng::Stream::sampling, counter++, 0); };
    const double r = draw();
    if (depth == 0 || r < 0.25) {
        if (draw() < 0.5) {
            const double v = std::floor(draw() * 1000.0) / (draw() < 0.5 ? 8.0 : 1000.0);
            return Expression::constant(draw() < 0.2 ? v * 1e-7 : v);
        }
        const double which = draw();
        if (which < 0.5)
            return Expression::variable(VarKind::x, draw() < 0.5 ? 0 : 1);
        return Expression::variable(which < 0.75 ? VarKind::z : VarKind::u, 0);
    }
    if (r < 0.35)
        return Expression::unary('-', random_tree(seed, counter, depth - 1));
    if (r < 0.8) {
        static constexpr char ops[] = {'+', '-', '*', '/', '^'};
        const char op = ops[static_cast<int>(draw() * 5) % 5];
        Expression lhs = random_tree(seed, counter, depth - 1);
        return Expression::binary(op, lhs, random_tree(seed, counter, depth - 1));
    }
    static constexpr const char* unary_fns[] = {"abs", "sqrt", "exp"};
    if (draw() < 0.5)
        return Expression::call(unary_fns[static_cast<int>(draw() * 3) % 3], {random_tree(seed, counter, depth - 1)});
    Expression a = random_tree(seed, counter, depth - 1);
    return Expression::call(draw() < 0.5 ? "min" : "max", {a, random_tree(seed, counter, depth - 1)});
}

}  // namespace

TEST_CASE("arithmetic and precedence")
{
    CHECK(eval("1 + 2 * 3", {0, 0}) == 7);
    CHECK(eval("(1 + 2) * 3", {0, 0}) == 9);
    CHECK(eval("-x1^2", {3, 0}) == -9);
    CHECK(eval("2^3^2", {0, 0}) == 512);
    CHECK(eval("2^-1", {0, 0}) == 0.5);
    CHECK(eval("x1 - x2 - 1", {5, 2}) == 2);
    CHECK(eval("8 / 4 / 2", {0, 0}) == 1);
    CHECK(eval("abs(-3) + min(x1, x2) + max(x1, x2)", {1, 4}) == 8);
    CHECK(eval("sqrt(4) * exp(0)", {0, 0}) == 2);
    CHECK(eval("1.5e-1 + .5", {0, 0}) == doctest::Approx(0.65));
    CHECK(eval("z1 * u1", {0, 0}, {2}, {3}) == 6);
}

TEST_CASE("squares match multiplication bitwise")
{
    const double x = 0.1234567891;
    CHECK(eval("x1^2", {x, 0}) == x * x);
}

TEST_CASE("syntax errors carry the offending position")
{
    const ParseError e = parse_error("x1 + * 2");
    CHECK(e.kind() == ParseErrorKind::syntax);
    CHECK(e.position() == 5);
    CHECK(std::string(e.what()).find("'*'") != std::string::npos);

    CHECK(parse_error("(x1").kind() == ParseErrorKind::syntax);
    CHECK(parse_error("x1 x2").kind() == ParseErrorKind::syntax);
    CHECK(parse_error("min(x1)").kind() == ParseErrorKind::syntax);
    CHECK(parse_error("").kind() == ParseErrorKind::syntax);
}

TEST_CASE("variables are checked against declared dimensions")
{
    CHECK(parse_error("y1 + 1").kind() == ParseErrorKind::undefined_variable);
    CHECK(parse_error("foo").kind() == ParseErrorKind::undefined_variable);
    CHECK(parse_error("x0").kind() == ParseErrorKind::undefined_variable);
    const ParseError e = parse_error("x1 + x3");
    CHECK(e.kind() == ParseErrorKind::dimension_mismatch);
    CHECK(e.position() == 5);
    CHECK(parse_error("z2").kind() == ParseErrorKind::dimension_mismatch);
}

TEST_CASE("printing is canonical and parses back to the same tree")
{
    const Expression e = Expression::parse("-3*x1 + min(z1, 2)^2 - -u1", kDims);
    CHECK(e.print() == "((((-3) * x1) + (min(z1, 2) ^ 2)) - (-u1))");
    CHECK(Expression::parse(e.print(), kDims) == e);
}

TEST_CASE("round trip holds on random trees")
{
    for (std::uint64_t seed = 0; seed < 500; ++seed) {
        std::uint64_t counter = 0;
        const Expression tree = random_tree(seed, counter, 5);
        const Expression once = Expression::parse(tree.print(), kDims);
        CHECK_MESSAGE(once == tree, tree.print());
        const Expression twice = Expression::parse(once.print(), kDims);
        CHECK(twice == once);
        CHECK(twice.print() == once.print());
        // Evaluation agrees bitwise after the round trip (NaN compares by class).
        const double a = tree.eval(vec_of({0.3, -0.7}), vec_of({1.1}), vec_of({0.5}));
        const double b = twice.eval(vec_of({0.3, -0.7}), vec_of({1.1}), vec_of({0.5}));
        CHECK(((a == b) || (std::isnan(a) && std::isnan(b))));
    }
}
