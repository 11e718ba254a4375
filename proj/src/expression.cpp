#include "vandisc/expression.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <utility>

namespace vandisc::model {

struct Expression::Node {
    enum class Kind { number, variable, neg, binary, call } kind;
    double value = 0.0;
    VarKind var = VarKind::x;
    int index = 0;
    char op = 0;
    std::string function;
    std::vector<std::shared_ptr<const Node>> args;
};

using NodePtr = std::shared_ptr<const Expression::Node>;

ParseError::ParseError(ParseErrorKind kind, std::size_t position, const std::string& message)
    : std::runtime_error(message + " at position " + std::to_string(position)),
      kind_(kind),
      position_(position),
      detail_(message)
{
}

namespace {

struct FunctionInfo {
    std::string_view name;
    int arity;
};

constexpr std::array<FunctionInfo, 5> kFunctions = {{{"abs", 1}, {"min", 2}, {"max", 2}, {"sqrt", 1}, {"exp", 1}}};

const FunctionInfo* find_function(std::string_view name)
{
    for (const auto& info : kFunctions)
        if (info.name == name)
            return &info;
    return nullptr;
}

NodePtr make_number(double value)
{
    auto node = std::make_shared<Expression::Node>();
    node->kind = Expression::Node::Kind::number;
    node->value = value;
    return node;
}

NodePtr make_variable(VarKind var, int index)
{
    auto node = std::make_shared<Expression::Node>();
    node->kind = Expression::Node::Kind::variable;
    node->var = var;
    node->index = index;
    return node;
}

NodePtr make_neg(NodePtr arg)
{
    auto node = std::make_shared<Expression::Node>();
    node->kind = Expression::Node::Kind::neg;
    node->args = {std::move(arg)};
    return node;
}

NodePtr make_binary(char op, NodePtr lhs, NodePtr rhs)
{
    auto node = std::make_shared<Expression::Node>();
    node->kind = Expression::Node::Kind::binary;
    node->op = op;
    node->args = {std::move(lhs), std::move(rhs)};
    return node;
}

NodePtr make_call(std::string_view function, std::vector<NodePtr> args)
{
    auto node = std::make_shared<Expression::Node>();
    node->kind = Expression::Node::Kind::call;
    node->function = std::string(function);
    node->args = std::move(args);
    return node;
}

class Parser {
public:
    Parser(std::string_view text, VariableDims dims) : text_(text), dims_(dims) {}

    NodePtr parse_all()
    {
        NodePtr result = parse_expr();
        skip_space();
        if (pos_ != text_.size())
            fail_token();
        return result;
    }

private:
    [[noreturn]] void fail(ParseErrorKind kind, std::size_t at, const std::string& message)
    {
        throw ParseError(kind, at, message);
    }

    [[noreturn]] void fail_token()
    {
        skip_space();
        if (pos_ >= text_.size())
            fail(ParseErrorKind::syntax, pos_, "syntax error: unexpected end of input");
        fail(ParseErrorKind::syntax, pos_, std::string("syntax error: unexpected token '") + text_[pos_] + "'");
    }

    void skip_space()
    {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
    }

    bool accept(char c)
    {
        skip_space();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c)
    {
        if (!accept(c))
            fail_token();
    }

    NodePtr parse_expr()
    {
        NodePtr lhs = parse_term();
        for (;;) {
            if (accept('+'))
                lhs = make_binary('+', lhs, parse_term());
            else if (accept('-'))
                lhs = make_binary('-', lhs, parse_term());
            else
                return lhs;
        }
    }

    NodePtr parse_term()
    {
        NodePtr lhs = parse_unary();
        for (;;) {
            if (accept('*'))
                lhs = make_binary('*', lhs, parse_unary());
            else if (accept('/'))
                lhs = make_binary('/', lhs, parse_unary());
            else
                return lhs;
        }
    }

    NodePtr parse_unary()
    {
        if (accept('-'))
            return make_neg(parse_unary());
        return parse_power();
    }

    NodePtr parse_power()
    {
        NodePtr base = parse_atom();
        if (accept('^'))
            return make_binary('^', base, parse_unary());
        return base;
    }

    NodePtr parse_atom()
    {
        skip_space();
        if (pos_ >= text_.size())
            fail_token();
        const char c = text_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.')
            return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)))
            return parse_identifier();
        if (accept('(')) {
            NodePtr inner = parse_expr();
            expect(')');
            return inner;
        }
        fail_token();
    }

    NodePtr parse_number()
    {
        const std::size_t start = pos_;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
        if (pos_ < text_.size() && text_[pos_] == '.') {
            ++pos_;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
                ++pos_;
        }
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            std::size_t probe = pos_ + 1;
            if (probe < text_.size() && (text_[probe] == '+' || text_[probe] == '-'))
                ++probe;
            if (probe < text_.size() && std::isdigit(static_cast<unsigned char>(text_[probe]))) {
                pos_ = probe;
                while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
                    ++pos_;
            }
        }
        const std::string literal(text_.substr(start, pos_ - start));
        if (literal == ".")
            fail(ParseErrorKind::syntax, start, "syntax error: malformed number");
        return make_number(std::strtod(literal.c_str(), nullptr));
    }

    NodePtr parse_identifier()
    {
        const std::size_t start = pos_;
        while (pos_ < text_.size() && std::isalnum(static_cast<unsigned char>(text_[pos_])) )
            ++pos_;
        const std::string_view name = text_.substr(start, pos_ - start);

        if (const FunctionInfo* info = find_function(name)) {
            skip_space();
            if (pos_ < text_.size() && text_[pos_] == '(') {
                ++pos_;
                std::vector<NodePtr> args{parse_expr()};
                while (accept(','))
                    args.push_back(parse_expr());
                expect(')');
                if (static_cast<int>(args.size()) != info->arity)
                    fail(ParseErrorKind::syntax, start,
                         "syntax error: " + std::string(name) + " takes " + std::to_string(info->arity) + " argument(s)");
                return make_call(name, std::move(args));
            }
        }

        const char head = name.front();
        const std::string_view digits = name.substr(1);
        const bool numbered = !digits.empty() && digits.front() != '0' &&
                              std::all_of(digits.begin(), digits.end(), [](char d) { return std::isdigit(static_cast<unsigned char>(d)); });
        if (!numbered || (head != 'x' && head != 'z' && head != 'u'))
            fail(ParseErrorKind::undefined_variable, start, "undefined variable '" + std::string(name) + "'");
        if (digits.size() > 3)
            fail(ParseErrorKind::dimension_mismatch, start, "variable index too large in '" + std::string(name) + "'");
        const int index = std::atoi(std::string(digits).c_str());
        const VarKind kind = head == 'x' ? VarKind::x : head == 'z' ? VarKind::z : VarKind::u;
        const int limit = kind == VarKind::x ? dims_.state : kind == VarKind::z ? dims_.noise : dims_.control;
        if (index > limit)
            fail(ParseErrorKind::dimension_mismatch, start,
                 "dimension mismatch: '" + std::string(name) + "' exceeds declared dimension " + std::to_string(limit));
        return make_variable(kind, index - 1);
    }

    std::string_view text_;
    VariableDims dims_;
    std::size_t pos_ = 0;
};

void print_node(const Expression::Node& node, std::string& out)
{
    using Kind = Expression::Node::Kind;
    switch (node.kind) {
    case Kind::number: {
        char buffer[40];
        std::snprintf(buffer, sizeof buffer, "%.17g", node.value);
        out += buffer;
        return;
    }
    case Kind::variable:
        out += node.var == VarKind::x ? 'x' : node.var == VarKind::z ? 'z' : 'u';
        out += std::to_string(node.index + 1);
        return;
    case Kind::neg:
        out += "(-";
        print_node(*node.args[0], out);
        out += ')';
        return;
    case Kind::binary:
        out += '(';
        print_node(*node.args[0], out);
        out += ' ';
        out += node.op;
        out += ' ';
        print_node(*node.args[1], out);
        out += ')';
        return;
    case Kind::call:
        out += node.function;
        out += '(';
        for (std::size_t i = 0; i < node.args.size(); ++i) {
            if (i > 0)
                out += ", ";
            print_node(*node.args[i], out);
        }
        out += ')';
        return;
    }
}

bool equal_nodes(const Expression::Node& a, const Expression::Node& b)
{
    if (a.kind != b.kind || a.args.size() != b.args.size())
        return false;
    using Kind = Expression::Node::Kind;
    switch (a.kind) {
    case Kind::number:
        if (std::bit_cast<std::uint64_t>(a.value) != std::bit_cast<std::uint64_t>(b.value))
            return false;
        break;
    case Kind::variable:
        if (a.var != b.var || a.index != b.index)
            return false;
        break;
    case Kind::binary:
        if (a.op != b.op)
            return false;
        break;
    case Kind::call:
        if (a.function != b.function)
            return false;
        break;
    case Kind::neg:
        break;
    }
    for (std::size_t i = 0; i < a.args.size(); ++i)
        if (!equal_nodes(*a.args[i], *b.args[i]))
            return false;
    return true;
}

bool node_uses(const Expression::Node& node, VarKind kind)
{
    if (node.kind == Expression::Node::Kind::variable)
        return node.var == kind;
    for (const auto& arg : node.args)
        if (node_uses(*arg, kind))
            return true;
    return false;
}

}  // namespace

Expression::Expression(std::shared_ptr<const Node> root) : root_(std::move(root))
{
    compile();
}

Expression Expression::parse(std::string_view text, VariableDims dims)
{
    return Expression(Parser(text, dims).parse_all());
}

Expression Expression::constant(double value)
{
    if (std::signbit(value))
        return Expression(make_neg(make_number(-value)));
    return Expression(make_number(value));
}

Expression Expression::variable(VarKind kind, int index)
{
    return Expression(make_variable(kind, index));
}

Expression Expression::unary(char op, const Expression& arg)
{
    if (op != '-')
        throw std::invalid_argument("unknown unary operator");
    return Expression(make_neg(arg.root_));
}

Expression Expression::binary(char op, const Expression& lhs, const Expression& rhs)
{
    if (op != '+' && op != '-' && op != '*' && op != '/' && op != '^')
        throw std::invalid_argument("unknown binary operator");
    return Expression(make_binary(op, lhs.root_, rhs.root_));
}

Expression Expression::call(std::string_view function, std::vector<Expression> args)
{
    const FunctionInfo* info = find_function(function);
    if (!info || static_cast<int>(args.size()) != info->arity)
        throw std::invalid_argument("unknown function or wrong arity: " + std::string(function));
    std::vector<NodePtr> nodes;
    for (auto& arg : args)
        nodes.push_back(arg.root_);
    return Expression(make_call(function, std::move(nodes)));
}

void Expression::compile()
{
    program_.clear();
    int depth = 0;
    int max_depth = 0;
    auto emit = [&](auto&& self, const Node& node) -> void {
        switch (node.kind) {
        case Node::Kind::number:
            program_.push_back({Op::push, 0, node.value});
            ++depth;
            break;
        case Node::Kind::variable:
            program_.push_back({node.var == VarKind::x ? Op::load_x : node.var == VarKind::z ? Op::load_z : Op::load_u,
                                node.index, 0.0});
            ++depth;
            break;
        case Node::Kind::neg:
            self(self, *node.args[0]);
            program_.push_back({Op::neg});
            break;
        case Node::Kind::binary:
            self(self, *node.args[0]);
            self(self, *node.args[1]);
            program_.push_back({node.op == '+'   ? Op::add
                                : node.op == '-' ? Op::sub
                                : node.op == '*' ? Op::mul
                                : node.op == '/' ? Op::div
                                                 : Op::pow});
            --depth;
            break;
        case Node::Kind::call:
            for (const auto& arg : node.args)
                self(self, *arg);
            if (node.function == "abs")
                program_.push_back({Op::abs});
            else if (node.function == "sqrt")
                program_.push_back({Op::sqrt});
            else if (node.function == "exp")
                program_.push_back({Op::exp});
            else {
                program_.push_back({node.function == "min" ? Op::min : Op::max});
                --depth;
            }
            break;
        }
        max_depth = std::max(max_depth, depth);
    };
    emit(emit, *root_);
    stack_depth_ = max_depth;
}

double Expression::eval(std::span<const double> x, std::span<const double> z, std::span<const double> u) const
{
    if (!root_)
        throw std::logic_error("evaluating an empty expression");
    constexpr int kInline = 64;
    std::array<double, kInline> inline_stack;  // slots are written before they are read
    inline_stack[0] = 0.0;
    std::vector<double> heap_stack;
    double* stack = inline_stack.data();
    if (stack_depth_ > kInline) {
        heap_stack.resize(static_cast<std::size_t>(stack_depth_));
        stack = heap_stack.data();
    }
    auto load = [](std::span<const double> values, int index) {
        if (static_cast<std::size_t>(index) >= values.size())
            throw std::out_of_range("expression variable index out of range");
        return values[static_cast<std::size_t>(index)];
    };
    int top = 0;
    for (const Instr& in : program_) {
        switch (in.op) {
        case Op::push: stack[top++] = in.value; break;
        case Op::load_x: stack[top++] = load(x, in.index); break;
        case Op::load_z: stack[top++] = load(z, in.index); break;
        case Op::load_u: stack[top++] = load(u, in.index); break;
        case Op::neg: stack[top - 1] = -stack[top - 1]; break;
        case Op::abs: stack[top - 1] = std::abs(stack[top - 1]); break;
        case Op::sqrt: stack[top - 1] = std::sqrt(stack[top - 1]); break;
        case Op::exp: stack[top - 1] = std::exp(stack[top - 1]); break;
        case Op::add: --top; stack[top - 1] += stack[top]; break;
        case Op::sub: --top; stack[top - 1] -= stack[top]; break;
        case Op::mul: --top; stack[top - 1] *= stack[top]; break;
        case Op::div: --top; stack[top - 1] /= stack[top]; break;
        case Op::pow: {
            --top;
            const double e = stack[top];
            // Small integer exponents are expanded so x^2 matches x*x bitwise.
            if (e == 2.0)
                stack[top - 1] *= stack[top - 1];
            else
                stack[top - 1] = std::pow(stack[top - 1], e);
            break;
        }
        case Op::min: --top; stack[top - 1] = std::min(stack[top - 1], stack[top]); break;
        case Op::max: --top; stack[top - 1] = std::max(stack[top - 1], stack[top]); break;
        }
    }
    return stack[0];
}

std::string Expression::print() const
{
    std::string out;
    if (root_)
        print_node(*root_, out);
    return out;
}

bool Expression::uses(VarKind kind) const
{
    return root_ && node_uses(*root_, kind);
}

bool operator==(const Expression& a, const Expression& b)
{
    if (!a.root_ || !b.root_)
        return !a.root_ && !b.root_;
    return equal_nodes(*a.root_, *b.root_);
}

}  // namespace vandisc::model
