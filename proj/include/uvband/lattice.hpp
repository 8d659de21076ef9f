#pragma once

#include "uvband/band.hpp"
#include "uvband/payoff.hpp"

#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace uvband {

/// Expected overshoot of a continuous-time supremum above its value on a
/// discrete monitoring grid, in units of the per-step standard deviation
/// (the -zeta(1/2)/sqrt(2*pi) constant of discrete-monitoring asymptotics).
/// Applied to running-max claims at terminal evaluation so lattice prices
/// track the continuous supremum rather than the grid maximum; set to 0 to
/// price the grid maximum itself.
inline constexpr double kSupMonitoringCorrection = 0.5825971579390108;

struct LatticeOptions {
    double sup_correction = kSupMonitoringCorrection;
    int integral_aux_factor = 2; // integral aux points = factor * n_steps
};

/// Discretization of a measure band: time knots chosen so the upper-curve
/// increment is equal across steps, one space step dx = sqrt(max upper
/// increment) so that the middle transition probability stays nonnegative.
struct LatticeSpec {
    MeasureBand band;
    int n_steps = 0;
    std::vector<double> time_knots; // n_steps + 1 entries, t_0 = 0, t_n = T
    std::vector<double> v_low;      // per-step lower variance bound
    std::vector<double> v_high;     // per-step upper variance bound
    double dx = 0.0;
    double dx2 = 0.0; // max_i v_high[i]; divisor for transition probabilities
    LatticeOptions options;

    double horizon() const { return band.horizon; }
    double step_dt(int i) const { return time_knots[i + 1] - time_knots[i]; }

    /// Step index whose knot equals t (AlignmentError otherwise).
    int step_of(double t) const;
    int nearest_step(double t) const;
};

LatticeSpec build_lattice(const MeasureBand& band, int n_steps, LatticeOptions options = {});

// ---------------------------------------------------------------------------
// Auxiliary state layout shared by value / policy / delta tables.

enum class AuxKind : std::uint8_t { None, RunningMax, Fixing, Integral };

/// Describes the auxiliary dimension a payoff needs on the lattice and how
/// nodes are laid out per time slice. Space index j runs over [-i, i] at
/// slice i; the aux index k is local to the slice.
struct AuxInfo {
    AuxKind kind = AuxKind::None;
    int last_step = 0; // slice at which the claim value is settled
    int fix_step = -1; // Fixing: slice of the first cylindrical date
    double y_lo = 0.0, y_hi = 0.0;
    int y_points = 1;
    Expr integral_f;                // Integral: the integrand
    std::vector<double> f_at_level; // Integral: F(j * dx), index j + n_steps

    int width(int i) const { return 2 * i + 1; }
    int aux_count(int i) const;
    std::size_t slice_size(int i) const;
    std::size_t node_index(int i, int j, int k) const;
    double y_spacing() const;
    double y_value(int k) const;
};

AuxInfo make_aux_info(const LatticeSpec& spec, const Payoff& payoff);

/// Tie tolerance for the bang-bang endpoint selection: second differences
/// within rounding noise of the successor values count as zero, so exactly
/// linear regions resolve deterministically to the upper endpoint instead
/// of following cancellation noise.
inline double policy_tie_tolerance(double vu, double vm, double vd) {
    return 64.0 * 2.220446049250313e-16 *
           (std::abs(vu) + std::abs(vm) + std::abs(vd));
}

// ---------------------------------------------------------------------------

/// Dynamic-programming value table over (time slice, space level, aux).
struct ValueSurface {
    LatticeSpec spec;
    AuxInfo aux;
    std::vector<std::vector<double>> slices;

    double at(int i, int j, int k = 0) const {
        return slices[static_cast<std::size_t>(i)][aux.node_index(i, j, k)];
    }
};

/// Variance endpoint selected at each node (true = upper).
struct Policy {
    AuxInfo aux;
    std::vector<std::vector<std::uint8_t>> slices; // per decision slice 0..last-1

    bool is_high(int i, int j, int k = 0) const {
        return slices[static_cast<std::size_t>(i)][aux.node_index(i, j, k)] != 0;
    }
    double fraction_high() const;
};

struct PricingResult {
    double price = 0.0;
    std::shared_ptr<const ValueSurface> surface;
    std::shared_ptr<const Policy> policy;
};

/// Discrete hedge ratios per node; lookup uses the nearest time knot and
/// linear interpolation in space and aux. Beyond the claim's last fixing
/// the position is flat.
struct HedgeStrategy {
    LatticeSpec spec;
    AuxInfo aux;
    std::vector<std::vector<double>> slices; // per decision slice 0..last-1

    double at(int i, int j, int k = 0) const {
        return slices[static_cast<std::size_t>(i)][aux.node_index(i, j, k)];
    }
    double lookup(double t, double x, double aux_value = 0.0) const;
    /// As lookup but with the decision step already known (0 beyond the
    /// claim's last fixing).
    double lookup_at_step(int i, double x, double aux_value = 0.0) const;

    static HedgeStrategy constant(const LatticeSpec& spec, double delta);
};

/// Tracks the auxiliary state of a payoff along a simulated path. Call
/// observe(i, B_i) in knot order; the returned value is the aux state
/// usable for decisions over the step starting at knot i (left endpoint
/// convention for time integrals).
class AuxTracker {
  public:
    AuxTracker(const AuxInfo& aux, const LatticeSpec& spec);
    AuxTracker(const Payoff& payoff, const LatticeSpec& spec);

    void reset();
    double observe(int knot, double b);
    AuxKind kind() const { return kind_; }

  private:
    AuxKind kind_ = AuxKind::None;
    Expr f_;
    std::vector<double> dt_;
    int fix_step_ = -1;
    double acc_ = 0.0;
    double fix_ = 0.0;
    double max_ = 0.0;
    bool started_ = false;
};

// ---------------------------------------------------------------------------
// Operations.

/// Cheapest superreplication price on the lattice: backward induction with
/// the per-step variance chosen at the band endpoint that maximizes the
/// one-step continuation (upper endpoint iff the discrete second difference
/// of the continuation value is >= 0; ties go to the upper endpoint).
PricingResult price_upper(const LatticeSpec& spec, const Payoff& payoff);

/// Sub-replication value -price_upper(-f): same recursion with the
/// endpoint selection reversed.
PricingResult price_lower(const LatticeSpec& spec, const Payoff& payoff);

/// Central-difference hedge ratios from a value surface, with aux
/// successors matching the pricing recursion.
HedgeStrategy extract_delta(const ValueSurface& surface);

struct ConvergencePoint {
    int n_steps = 0;
    double price = 0.0;
};

struct ConvergenceReport {
    std::vector<ConvergencePoint> points;
    double estimated_order = 0.0; // log-regression on successive differences
    bool exact = false;           // successive differences at rounding level
};

ConvergenceReport convergence_sweep(const MeasureBand& band, const Payoff& payoff,
                                    std::span<const int> steps, LatticeOptions options = {});

} // namespace uvband
