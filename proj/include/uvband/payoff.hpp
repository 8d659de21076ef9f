#pragma once

#include "uvband/expr.hpp"

#include <span>
#include <string>
#include <variant>
#include <vector>

namespace uvband {

/// Claim on the terminal value: g(B_T).
struct TerminalPayoff {
    Expr g;
};

/// Claim on finitely many fixings: F(B_{t_1}, ..., B_{t_d}) with strictly
/// increasing dates in (0, T]. Terminal is the d = 1, t_1 = T special case.
struct CylindricalPayoff {
    std::vector<double> dates;
    Expr f;
};

/// Claim on the running supremum: G(sup_{[0,T]} B), evaluated on sampled
/// paths as G of the grid maximum (the path starts at 0, so the maximum is
/// never negative).
struct RunningMaxPayoff {
    Expr g;
};

/// Claim on a time integral: G(int_0^T F(B_s) ds) with left-endpoint
/// quadrature on sampled paths.
struct TimeIntegralPayoff {
    Expr f;
    Expr g;
};

using Payoff =
    std::variant<TerminalPayoff, CylindricalPayoff, RunningMaxPayoff, TimeIntegralPayoff>;

/// Families of claims for which the price/worst-measure duality is
/// established; every payoff maps to exactly one.
enum class DualityClass {
    Cylindrical,
    RunningMax,
    TimeIntegral,
};

DualityClass classify_duality_class(const Payoff& payoff);

/// Structural checks (date ordering, expression arity). Throws
/// ValidationError. `horizon` bounds cylindrical dates when positive.
void validate_payoff(const Payoff& payoff, double horizon = 0.0);

/// Evaluates the claim on a discrete path given as parallel (time, value)
/// arrays covering [0, T]. Cylindrical dates must coincide with grid times
/// (AlignmentError otherwise). Deterministic; invariant under duplicated
/// grid points.
double evaluate_payoff(const Payoff& payoff, std::span<const double> times,
                       std::span<const double> values);

/// Payoff whose value is 1 where |f| exceeds `threshold` (and 0 below),
/// built by wrapping the outer function in a steep clamp ramp; used for
/// capacity-of-event estimates.
Payoff exceedance_indicator(const Payoff& payoff, double threshold);

std::string payoff_kind_name(const Payoff& payoff);
std::string describe_payoff(const Payoff& payoff);
std::string to_string(DualityClass c);

} // namespace uvband
