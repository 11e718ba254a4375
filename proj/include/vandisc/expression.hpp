#pragma once

#include "vandisc/types.hpp"

#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace vandisc::model {

enum class ParseErrorKind { syntax, undefined_variable, dimension_mismatch };

class ParseError : public std::runtime_error {
public:
    ParseError(ParseErrorKind kind, std::size_t position, const std::string& message);

    ParseErrorKind kind() const { return kind_; }
    // Byte offset into the source text.
    std::size_t position() const { return position_; }
    // Message without the position suffix.
    const std::string& detail() const { return detail_; }

private:
    ParseErrorKind kind_;
    std::size_t position_;
    std::string detail_;
};

// Variables x1..xN (state), z1..zd (noise), u1..uk (control).
struct VariableDims {
    int state = 0;
    int noise = 0;
    int control = 0;
};

enum class VarKind : unsigned char { x, z, u };

// A parsed coefficient expression. Grammar:
//   expr   := term (('+' | '-') term)*
//   term   := unary (('*' | '/') unary)*
//   unary  := '-' unary | power
//   power  := atom ('^' unary)?
//   atom   := number | variable | func '(' expr (',' expr)* ')' | '(' expr ')'
//   func   := abs | min | max | sqrt | exp
class Expression {
public:
    struct Node;

    Expression() = default;

    static Expression parse(std::string_view text, VariableDims dims);

    double eval(std::span<const double> x, std::span<const double> z, std::span<const double> u) const;
    double eval(const Vec& x, const Vec& z, const Vec& u) const
    {
        return eval(as_span(x), as_span(z), as_span(u));
    }

    // Canonical, fully parenthesized text that parses back to the same tree.
    std::string print() const;

    bool uses(VarKind kind) const;
    bool empty() const { return !root_; }

    // Structural equality of the expression trees.
    friend bool operator==(const Expression& a, const Expression& b);

    // Construction helpers for generated trees.
    static Expression constant(double value);
    static Expression variable(VarKind kind, int index);
    static Expression unary(char op, const Expression& arg);
    static Expression binary(char op, const Expression& lhs, const Expression& rhs);
    static Expression call(std::string_view function, std::vector<Expression> args);

private:
    enum class Op : unsigned char { push, load_x, load_z, load_u, neg, add, sub, mul, div, pow, abs, min, max, sqrt, exp };
    struct Instr {
        Op op;
        int index = 0;
        double value = 0.0;
    };

    explicit Expression(std::shared_ptr<const Node> root);
    void compile();

    std::shared_ptr<const Node> root_;
    std::vector<Instr> program_;
    int stack_depth_ = 0;
};

}  // namespace vandisc::model
