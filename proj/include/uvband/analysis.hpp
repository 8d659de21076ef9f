#pragma once

#include "uvband/lattice.hpp"
#include "uvband/payoff.hpp"
#include "uvband/simulate.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace uvband {

// ---------------------------------------------------------------------------
// Pathwise superhedge audit.

struct HedgeReport {
    double initial_capital = 0.0;
    double epsilon = 0.0;
    std::vector<double> terminal_values; // a + I_T(h), pooled over ensembles
    std::vector<double> shortfalls;      // max(f - (a + I_T(h)), 0)
    long paths = 0;
    long violations = 0; // shortfall > epsilon
    double violation_rate = 0.0;
    double max_shortfall = 0.0;
    double mean_shortfall = 0.0;
};

/// Incremental form of verify_superhedge: feed ensembles one at a time so
/// large batteries can be generated in blocks and released.
class HedgeAuditor {
  public:
    HedgeAuditor(double initial_capital, const HedgeStrategy& strategy, Payoff payoff,
                 double epsilon);

    void add(const PathEnsemble& ensemble);
    HedgeReport finish();

  private:
    const HedgeStrategy& strategy_;
    Payoff payoff_;
    HedgeReport report_;
};

/// Audits a + I_T(h) >= f - epsilon on every path of every ensemble.
HedgeReport verify_superhedge(double initial_capital, const HedgeStrategy& strategy,
                              std::span<const PathEnsemble> ensembles, const Payoff& payoff,
                              double epsilon);

/// Default audit tolerance: 3 dx^2 (the per-step discrete residual is
/// bounded by curvature times the variance mismatch, itself bounded by dx^2).
double default_hedge_epsilon(const LatticeSpec& spec);

// ---------------------------------------------------------------------------
// Dual bounds and the duality gap.

struct SchemeEstimate {
    std::string scheme;
    double value = 0.0;
    double se = 0.0;
};

/// Monte Carlo E_P[f] per scheme with standard errors; deterministic given
/// the seed (scheme i uses substream derive_seed(seed, i)).
std::vector<SchemeEstimate> dual_bound(const Payoff& payoff, const MeasureBand& band,
                                       std::span<const MeasureScheme> battery, int n_paths,
                                       int n_steps, std::uint64_t seed);

struct DualityReport {
    double primal = 0.0;
    std::vector<SchemeEstimate> duals;
    std::string best_scheme;
    double best_dual = 0.0;
    double best_se = 0.0;
    double gap = 0.0;          // primal - best_dual, reported even when negative
    double gap_relative = 0.0; // gap / max(|primal|, 1e-12)
    bool inconsistent = false; // gap < -3 * best_se: flags a primal error
};

DualityReport duality_gap(double primal, std::span<const SchemeEstimate> duals);

// ---------------------------------------------------------------------------
// Capacity.

struct CapacityEstimate {
    double value = 0.0; // max over schemes of sqrt(E_P f^2)
    std::vector<SchemeEstimate> per_scheme;
};

CapacityEstimate capacity(const Payoff& payoff, const MeasureBand& band,
                          std::span<const MeasureScheme> battery, int n_paths, int n_steps,
                          std::uint64_t seed);

struct MarkovCheckReport {
    double alpha = 0.0;
    double lhs = 0.0; // max over schemes of sqrt(P(|f| > alpha))
    double lhs_se = 0.0;
    double rhs = 0.0; // capacity(f) / alpha
    bool pass = false;
};

/// Chebyshev-type inequality for the sampled capacity: the exceedance event
/// uses an indicator payoff built from the expression grammar.
MarkovCheckReport markov_check(const Payoff& payoff, double alpha, const MeasureBand& band,
                               std::span<const MeasureScheme> battery, int n_paths, int n_steps,
                               std::uint64_t seed);

struct CapacityAxiomReport {
    CapacityEstimate a;
    CapacityEstimate b;
    CapacityEstimate a_union_b;
    bool nested = false;             // caller asserts A subset of B
    bool monotonicity_pass = false;  // c(A) <= c(B) + 3 SE (when nested)
    bool subadditivity_pass = false; // c(A u B) <= c(A) + c(B) + 3 SE
};

/// Monotonicity / subadditivity on indicator-like payoffs, evaluated on
/// common paths per scheme. The union payoff is the pointwise max; A and B
/// must share kind (terminal or running-max) for the union to compose.
CapacityAxiomReport capacity_axiom_check(const Payoff& a, const Payoff& b, bool nested,
                                         const MeasureBand& band,
                                         std::span<const MeasureScheme> battery, int n_paths,
                                         int n_steps, std::uint64_t seed);

} // namespace uvband
