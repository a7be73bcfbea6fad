#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace phibranch {

/// Thrown by Expr::parse. offset() is the byte offset into the source text.
class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t offset, std::string expected, const std::string& message);

    std::size_t offset() const noexcept { return offset_; }
    const std::string& expected() const noexcept { return expected_; }
    /// The message without the offset suffix.
    const std::string& detail() const noexcept { return detail_; }

private:
    std::size_t offset_;
    std::string expected_;
    std::string detail_;
};

/// Thrown when an environment does not bind a variable used by an expression.
class UnboundVariable : public std::runtime_error {
public:
    explicit UnboundVariable(const std::string& name);
    const std::string& name() const noexcept { return name_; }

private:
    std::string name_;
};

/// Immutable arithmetic expression tree.
///
/// Grammar (lowest to highest precedence):
///
///     expr    := ['-'] term (('+' | '-') term)*
///     term    := power (('*' | '/') power)*
///     power   := primary ['^' power]            (right-associative)
///     primary := number | identifier | function '(' expr ')' | '(' expr ')'
///
/// A leading '-' binds tighter than '*' and '/' but looser than '^', so
/// "-a*b" is (-a)*b and "-a^2" is -(a^2). A sign may only open an
/// expression (start of text or after '('), so "a*-b" and "a+-b" are
/// rejected. The identifier "pi" is a builtin constant.
///
/// Domain violations (log of a non-positive number, division by zero) are
/// not errors: evaluation returns the IEEE result and callers test
/// std::isfinite.
class Expr {
public:
    enum class Kind { Constant, Variable, Unary, Binary };
    enum class UnaryOp { Neg, Sin, Cos, Tan, Arctan, Exp, Log, Abs, Sign, Sqrt };
    enum class BinaryOp { Add, Sub, Mul, Div, Pow };

    struct Node {
        Kind kind = Kind::Constant;
        double value = 0.0;
        std::string name;
        UnaryOp unary = UnaryOp::Neg;
        BinaryOp binary = BinaryOp::Add;
        std::shared_ptr<const Node> lhs;
        std::shared_ptr<const Node> rhs;
    };

    Expr();

    static Expr parse(std::string_view text);
    static Expr constant(double value);

    double eval(const std::map<std::string, double>& env) const;
    std::set<std::string> free_vars() const;

    /// Fully parenthesized text that parses back to a structurally equal tree.
    std::string print() const;

    /// Text the expression was parsed from (print() for constructed trees).
    const std::string& source() const noexcept { return source_; }

    const Node& root() const noexcept { return *root_; }

    friend bool operator==(const Expr& a, const Expr& b);

private:
    explicit Expr(std::shared_ptr<const Node> root, std::string source);

    std::shared_ptr<const Node> root_;
    std::string source_;
};

/// An Expr compiled against a fixed variable layout.
///
/// Variables are resolved to slot indices once, so evaluation is a flat
/// stack-machine loop over a span of values. Results are bit-identical to
/// Expr::eval for the same bindings.
class BoundExpr {
public:
    BoundExpr() = default;

    /// Throws UnboundVariable when a free variable of e is not in slots.
    BoundExpr(const Expr& e, std::span<const std::string> slots);

    double operator()(std::span<const double> values) const;

    bool empty() const noexcept { return code_.empty(); }

private:
    enum class Op : unsigned char {
        Const, Load, Neg, Sin, Cos, Tan, Arctan, Exp, Log, Abs, Sign, Sqrt,
        Add, Sub, Mul, Div, Pow, IntPow
    };
    struct Instr {
        Op op;
        int index;
        double value;
    };

    void compile(const Expr::Node& node, std::span<const std::string> slots, std::size_t depth);

    std::vector<Instr> code_;
    std::size_t max_stack_ = 0;
};

namespace detail {
/// Power with exact repeated multiplication for small integral exponents.
double power(double base, double exponent);
bool small_integer_exponent(double exponent, int& n);
double sign(double x);
}  // namespace detail

}  // namespace phibranch
