#include "phibranch/expr.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numbers>

namespace phibranch {

ParseError::ParseError(std::size_t offset, std::string expected, const std::string& message)
    : std::runtime_error(message + " at offset " + std::to_string(offset) + " (expected " + expected + ")"),
      offset_(offset),
      expected_(std::move(expected)),
      detail_(message) {}

UnboundVariable::UnboundVariable(const std::string& name)
    : std::runtime_error("unbound variable '" + name + "'"), name_(name) {}

namespace detail {

bool small_integer_exponent(double exponent, int& n) {
    if (exponent != std::floor(exponent) || std::fabs(exponent) > 16.0) return false;
    n = static_cast<int>(exponent);
    return true;
}

double power(double base, double exponent) {
    int n = 0;
    if (!small_integer_exponent(exponent, n)) return std::pow(base, exponent);
    const bool invert = n < 0;
    unsigned k = static_cast<unsigned>(invert ? -n : n);
    double result = 1.0;
    double b = base;
    while (k != 0) {
        if (k & 1u) result *= b;
        k >>= 1u;
        if (k != 0) b *= b;
    }
    return invert ? 1.0 / result : result;
}

double sign(double x) {
    if (x > 0.0) return 1.0;
    if (x < 0.0) return -1.0;
    return x;  // keeps 0 and NaN
}

}  // namespace detail

namespace {

using Node = Expr::Node;
using NodePtr = std::shared_ptr<const Node>;

struct FunctionName {
    std::string_view name;
    Expr::UnaryOp op;
};

constexpr std::array<FunctionName, 9> kFunctions{{
    {"sin", Expr::UnaryOp::Sin},
    {"cos", Expr::UnaryOp::Cos},
    {"tan", Expr::UnaryOp::Tan},
    {"arctan", Expr::UnaryOp::Arctan},
    {"exp", Expr::UnaryOp::Exp},
    {"log", Expr::UnaryOp::Log},
    {"abs", Expr::UnaryOp::Abs},
    {"sign", Expr::UnaryOp::Sign},
    {"sqrt", Expr::UnaryOp::Sqrt},
}};

const FunctionName* find_function(std::string_view name) {
    for (const auto& f : kFunctions)
        if (f.name == name) return &f;
    return nullptr;
}

std::string_view unary_name(Expr::UnaryOp op) {
    for (const auto& f : kFunctions)
        if (f.op == op) return f.name;
    return "-";
}

char binary_symbol(Expr::BinaryOp op) {
    switch (op) {
        case Expr::BinaryOp::Add: return '+';
        case Expr::BinaryOp::Sub: return '-';
        case Expr::BinaryOp::Mul: return '*';
        case Expr::BinaryOp::Div: return '/';
        case Expr::BinaryOp::Pow: return '^';
    }
    return '?';
}

NodePtr make_constant(double v) {
    auto n = std::make_shared<Node>();
    n->kind = Expr::Kind::Constant;
    n->value = v;
    return n;
}

NodePtr make_variable(std::string name) {
    auto n = std::make_shared<Node>();
    n->kind = Expr::Kind::Variable;
    n->name = std::move(name);
    return n;
}

NodePtr make_unary(Expr::UnaryOp op, NodePtr arg) {
    auto n = std::make_shared<Node>();
    n->kind = Expr::Kind::Unary;
    n->unary = op;
    n->lhs = std::move(arg);
    return n;
}

NodePtr make_binary(Expr::BinaryOp op, NodePtr a, NodePtr b) {
    auto n = std::make_shared<Node>();
    n->kind = Expr::Kind::Binary;
    n->binary = op;
    n->lhs = std::move(a);
    n->rhs = std::move(b);
    return n;
}

class Parser {
public:
    explicit Parser(std::string_view text) : text_(text) {}

    NodePtr parse_all() {
        skip_ws();
        if (pos_ == text_.size()) fail("expression", "empty expression");
        NodePtr e = parse_expr();
        skip_ws();
        if (pos_ != text_.size()) fail("operator or end of input", "unexpected character");
        return e;
    }

private:
    [[noreturn]] void fail(const std::string& expected, const std::string& message) const {
        throw ParseError(pos_, expected, message);
    }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool peek(char c) {
        skip_ws();
        return pos_ < text_.size() && text_[pos_] == c;
    }

    NodePtr parse_expr() {
        NodePtr lhs;
        if (peek('-')) {
            ++pos_;
            lhs = parse_term(true);
        } else {
            lhs = parse_term(false);
        }
        while (true) {
            if (peek('+')) {
                ++pos_;
                lhs = make_binary(Expr::BinaryOp::Add, lhs, parse_term(false));
            } else if (peek('-')) {
                ++pos_;
                lhs = make_binary(Expr::BinaryOp::Sub, lhs, parse_term(false));
            } else {
                return lhs;
            }
        }
    }

    NodePtr parse_term(bool negate_first) {
        NodePtr lhs = parse_power();
        if (negate_first) lhs = make_unary(Expr::UnaryOp::Neg, lhs);
        while (true) {
            if (peek('*')) {
                ++pos_;
                lhs = make_binary(Expr::BinaryOp::Mul, lhs, parse_power());
            } else if (peek('/')) {
                ++pos_;
                lhs = make_binary(Expr::BinaryOp::Div, lhs, parse_power());
            } else {
                return lhs;
            }
        }
    }

    NodePtr parse_power() {
        NodePtr base = parse_primary();
        if (peek('^')) {
            ++pos_;
            return make_binary(Expr::BinaryOp::Pow, base, parse_power());
        }
        return base;
    }

    NodePtr parse_primary() {
        skip_ws();
        if (pos_ == text_.size()) fail("number, identifier or '('", "unexpected end of input");
        const char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            NodePtr e = parse_expr();
            if (!peek(')')) fail("')'", "unbalanced parenthesis");
            ++pos_;
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
        fail("number, identifier or '('", std::string("unexpected '") + c + "'");
    }

    NodePtr parse_number() {
        const std::size_t start = pos_;
        auto digits = [&] {
            std::size_t n = 0;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                ++pos_;
                ++n;
            }
            return n;
        };
        std::size_t mantissa = digits();
        if (pos_ < text_.size() && text_[pos_] == '.') {
            ++pos_;
            mantissa += digits();
        }
        if (mantissa == 0) {
            pos_ = start;
            fail("digit", "malformed number");
        }
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            ++pos_;
            if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
            if (digits() == 0) fail("exponent digits", "malformed number");
        }
        double value = 0.0;
        const auto res = std::from_chars(text_.data() + start, text_.data() + pos_, value);
        if (res.ec != std::errc{} || res.ptr != text_.data() + pos_) {
            pos_ = start;
            fail("number", "number out of range");
        }
        return make_constant(value);
    }

    NodePtr parse_identifier() {
        const std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
            ++pos_;
        const std::string_view name = text_.substr(start, pos_ - start);
        const bool call = peek('(');
        if (const FunctionName* fn = find_function(name)) {
            if (!call) fail("'(' after function name", "function '" + std::string(name) + "' needs parentheses");
            ++pos_;
            NodePtr arg = parse_expr();
            if (!peek(')')) fail("')'", "unbalanced parenthesis");
            ++pos_;
            return make_unary(fn->op, arg);
        }
        if (call) {
            pos_ = start;
            fail("known function name", "unknown function '" + std::string(name) + "'");
        }
        if (name == "pi") return make_constant(std::numbers::pi);
        return make_variable(std::string(name));
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

double apply_unary(Expr::UnaryOp op, double a) {
    switch (op) {
        case Expr::UnaryOp::Neg: return -a;
        case Expr::UnaryOp::Sin: return std::sin(a);
        case Expr::UnaryOp::Cos: return std::cos(a);
        case Expr::UnaryOp::Tan: return std::tan(a);
        case Expr::UnaryOp::Arctan: return std::atan(a);
        case Expr::UnaryOp::Exp: return std::exp(a);
        case Expr::UnaryOp::Log: return std::log(a);
        case Expr::UnaryOp::Abs: return std::fabs(a);
        case Expr::UnaryOp::Sign: return detail::sign(a);
        case Expr::UnaryOp::Sqrt: return std::sqrt(a);
    }
    return a;
}

double apply_binary(Expr::BinaryOp op, double a, double b) {
    switch (op) {
        case Expr::BinaryOp::Add: return a + b;
        case Expr::BinaryOp::Sub: return a - b;
        case Expr::BinaryOp::Mul: return a * b;
        case Expr::BinaryOp::Div: return a / b;
        case Expr::BinaryOp::Pow: return detail::power(a, b);
    }
    return a;
}

double eval_node(const Node& n, const std::map<std::string, double>& env) {
    switch (n.kind) {
        case Expr::Kind::Constant: return n.value;
        case Expr::Kind::Variable: {
            const auto it = env.find(n.name);
            if (it == env.end()) throw UnboundVariable(n.name);
            return it->second;
        }
        case Expr::Kind::Unary: return apply_unary(n.unary, eval_node(*n.lhs, env));
        case Expr::Kind::Binary: {
            const double a = eval_node(*n.lhs, env);
            const double b = eval_node(*n.rhs, env);
            return apply_binary(n.binary, a, b);
        }
    }
    return 0.0;
}

void collect_vars(const Node& n, std::set<std::string>& out) {
    switch (n.kind) {
        case Expr::Kind::Constant: return;
        case Expr::Kind::Variable: out.insert(n.name); return;
        case Expr::Kind::Unary: collect_vars(*n.lhs, out); return;
        case Expr::Kind::Binary:
            collect_vars(*n.lhs, out);
            collect_vars(*n.rhs, out);
            return;
    }
}

void print_node(const Node& n, std::string& out) {
    switch (n.kind) {
        case Expr::Kind::Constant: {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.17g", n.value);
            out += buf;
            return;
        }
        case Expr::Kind::Variable: out += n.name; return;
        case Expr::Kind::Unary:
            if (n.unary == Expr::UnaryOp::Neg) {
                out += "(-";
                print_node(*n.lhs, out);
                out += ')';
            } else {
                out += unary_name(n.unary);
                out += '(';
                print_node(*n.lhs, out);
                out += ')';
            }
            return;
        case Expr::Kind::Binary:
            out += '(';
            print_node(*n.lhs, out);
            out += binary_symbol(n.binary);
            print_node(*n.rhs, out);
            out += ')';
            return;
    }
}

bool equal_nodes(const Node& a, const Node& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
        case Expr::Kind::Constant:
            return a.value == b.value || (std::isnan(a.value) && std::isnan(b.value));
        case Expr::Kind::Variable: return a.name == b.name;
        case Expr::Kind::Unary: return a.unary == b.unary && equal_nodes(*a.lhs, *b.lhs);
        case Expr::Kind::Binary:
            return a.binary == b.binary && equal_nodes(*a.lhs, *b.lhs) && equal_nodes(*a.rhs, *b.rhs);
    }
    return false;
}

}  // namespace

Expr::Expr() : root_(make_constant(0.0)), source_("0") {}

Expr::Expr(std::shared_ptr<const Node> root, std::string source)
    : root_(std::move(root)), source_(std::move(source)) {}

Expr Expr::parse(std::string_view text) {
    Parser parser(text);
    return Expr(parser.parse_all(), std::string(text));
}

Expr Expr::constant(double value) {
    auto node = make_constant(value);
    std::string text;
    print_node(*node, text);
    return Expr(std::move(node), std::move(text));
}

double Expr::eval(const std::map<std::string, double>& env) const { return eval_node(*root_, env); }

std::set<std::string> Expr::free_vars() const {
    std::set<std::string> out;
    collect_vars(*root_, out);
    return out;
}

std::string Expr::print() const {
    std::string out;
    print_node(*root_, out);
    return out;
}

bool operator==(const Expr& a, const Expr& b) { return equal_nodes(*a.root_, *b.root_); }

BoundExpr::BoundExpr(const Expr& e, std::span<const std::string> slots) {
    compile(e.root(), slots, 1);
}

void BoundExpr::compile(const Expr::Node& n, std::span<const std::string> slots, std::size_t depth) {
    max_stack_ = std::max(max_stack_, depth);
    switch (n.kind) {
        case Expr::Kind::Constant:
            code_.push_back({Op::Const, 0, n.value});
            return;
        case Expr::Kind::Variable: {
            const auto it = std::find(slots.begin(), slots.end(), n.name);
            if (it == slots.end()) throw UnboundVariable(n.name);
            code_.push_back({Op::Load, static_cast<int>(it - slots.begin()), 0.0});
            return;
        }
        case Expr::Kind::Unary: {
            compile(*n.lhs, slots, depth);
            static constexpr Op map[] = {Op::Neg, Op::Sin, Op::Cos, Op::Tan, Op::Arctan,
                                         Op::Exp, Op::Log, Op::Abs, Op::Sign, Op::Sqrt};
            code_.push_back({map[static_cast<int>(n.unary)], 0, 0.0});
            return;
        }
        case Expr::Kind::Binary: {
            int k = 0;
            if (n.binary == Expr::BinaryOp::Pow && n.rhs->kind == Expr::Kind::Constant &&
                detail::small_integer_exponent(n.rhs->value, k)) {
                compile(*n.lhs, slots, depth);
                code_.push_back({Op::IntPow, 0, n.rhs->value});
                return;
            }
            compile(*n.lhs, slots, depth);
            compile(*n.rhs, slots, depth + 1);
            static constexpr Op map[] = {Op::Add, Op::Sub, Op::Mul, Op::Div, Op::Pow};
            code_.push_back({map[static_cast<int>(n.binary)], 0, 0.0});
            return;
        }
    }
}

double BoundExpr::operator()(std::span<const double> values) const {
    std::array<double, 64> small{};
    std::vector<double> large;
    double* stack = small.data();
    if (max_stack_ > small.size()) {
        large.resize(max_stack_);
        stack = large.data();
    }
    std::size_t top = 0;
    for (const Instr& in : code_) {
        switch (in.op) {
            case Op::Const: stack[top++] = in.value; break;
            case Op::Load: stack[top++] = values[static_cast<std::size_t>(in.index)]; break;
            case Op::Neg: stack[top - 1] = -stack[top - 1]; break;
            case Op::Sin: stack[top - 1] = std::sin(stack[top - 1]); break;
            case Op::Cos: stack[top - 1] = std::cos(stack[top - 1]); break;
            case Op::Tan: stack[top - 1] = std::tan(stack[top - 1]); break;
            case Op::Arctan: stack[top - 1] = std::atan(stack[top - 1]); break;
            case Op::Exp: stack[top - 1] = std::exp(stack[top - 1]); break;
            case Op::Log: stack[top - 1] = std::log(stack[top - 1]); break;
            case Op::Abs: stack[top - 1] = std::fabs(stack[top - 1]); break;
            case Op::Sign: stack[top - 1] = detail::sign(stack[top - 1]); break;
            case Op::Sqrt: stack[top - 1] = std::sqrt(stack[top - 1]); break;
            case Op::IntPow: stack[top - 1] = detail::power(stack[top - 1], in.value); break;
            case Op::Add: --top; stack[top - 1] = stack[top - 1] + stack[top]; break;
            case Op::Sub: --top; stack[top - 1] = stack[top - 1] - stack[top]; break;
            case Op::Mul: --top; stack[top - 1] = stack[top - 1] * stack[top]; break;
            case Op::Div: --top; stack[top - 1] = stack[top - 1] / stack[top]; break;
            case Op::Pow: --top; stack[top - 1] = detail::power(stack[top - 1], stack[top]); break;
        }
    }
    return code_.empty() ? 0.0 : stack[0];
}

}  // namespace phibranch
