#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace uvband {

/// Immutable scalar expression tree over variables x1..xd.
///
/// Grammar: constant | variable | + | - | * | integer power | min | max
/// | abs | clamp(lo, hi). Evaluation is total on real inputs and
/// deterministic, which keeps payoff definitions serializable and
/// reproducible across runs. See docs/config-format.md for the concrete
/// syntax accepted by Expr::parse.
class Expr {
  public:
    enum class Kind : std::uint8_t {
        Constant,
        Variable,
        Add,
        Sub,
        Mul,
        Pow,
        Min,
        Max,
        Abs,
        Clamp,
    };

    Expr() = default;

    static Expr constant(double value);
    static Expr variable(int index); // 1-based: x1, x2, ...
    static Expr add(Expr a, Expr b);
    static Expr sub(Expr a, Expr b);
    static Expr mul(Expr a, Expr b);
    static Expr pow(Expr base, int exponent); // exponent in [0, 64]
    static Expr min(Expr a, Expr b);
    static Expr max(Expr a, Expr b);
    static Expr abs(Expr a);
    static Expr clamp(Expr a, double lo, double hi);

    /// Parses the textual form, e.g. "max(x1, 0) - 2*max(x1 - 0.1, 0)".
    /// Throws ValidationError on syntax errors.
    static Expr parse(const std::string& text);

    bool empty() const { return node_ == nullptr; }

    /// Evaluates with args[i-1] bound to xi. Throws RangeError if the
    /// expression references a variable beyond args.size().
    double eval(std::span<const double> args) const;
    double eval1(double x) const { return eval({&x, 1}); }

    /// Largest variable index referenced (0 for constant expressions).
    int arity() const;

    /// Canonical infix rendering; parse(to_string()) round-trips.
    std::string to_string() const;

    Kind kind() const;

  private:
    struct Node;
    std::shared_ptr<const Node> node_;

    static Expr make(Node&& n);
    explicit Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
};

} // namespace uvband
