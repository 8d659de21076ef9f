#pragma once

#include "uvband/band.hpp"
#include "uvband/lattice.hpp"
#include "uvband/rng.hpp"

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace uvband {

enum class IncrementLaw : std::uint8_t { Gaussian, Binomial };

/// Constant volatility: per-step variance sigma^2 * dt (must stay inside
/// the band increments).
struct ConstVolScheme {
    double sigma = 0.0;
};

/// User-supplied per-step variances, one per step.
struct DeterministicProfileScheme {
    std::vector<double> variances;
    std::string label = "profile";
};

/// Runs exactly at a band endpoint: v_i = v_low[i] or v_high[i].
struct BandEdgeScheme {
    bool high = true;
};

/// Convex mix of the band endpoints: v_i = v_low[i] + weight (v_high[i]
/// - v_low[i]).
struct BandMixScheme {
    double weight = 0.5;
};

/// Regime-switching between the band endpoints: [0, T] is split into
/// n_regimes blocks and each block independently runs at the upper
/// endpoint with probability p_high, else at the lower endpoint.
struct PiecewiseRandomScheme {
    int n_regimes = 2;
    double p_high = 0.5;
};

/// Replays the variance choices recorded by a lattice policy at the
/// current (time, nearest node, aux) state, realizing the lattice's
/// worst-case measure.
struct PolicyFeedbackScheme {
    std::shared_ptr<const Policy> policy;
    LatticeSpec spec; // grid the policy was computed on
};

struct MeasureScheme {
    std::variant<ConstVolScheme, DeterministicProfileScheme, BandEdgeScheme, BandMixScheme,
                 PiecewiseRandomScheme, PolicyFeedbackScheme>
        kind;
    IncrementLaw law = IncrementLaw::Gaussian;

    std::string name() const;
};

/// Battery of admissible measures used as the finite surrogate of the
/// family of martingale laws: band endpoints, midpoint, and three
/// regime-switching schemes. Policy feedback is appended by callers that
/// have priced a claim.
std::vector<MeasureScheme> default_battery(IncrementLaw law);

/// Seeded sample of martingale paths with per-step variances inside the
/// band. values / variances are row-major [path][knot] / [path][step].
struct PathEnsemble {
    std::vector<double> knots;
    int n_paths = 0;
    int n_steps = 0;
    int first_path = 0; // row offset when generated in blocks
    std::vector<double> values;
    std::vector<double> variances;
    std::string scheme;
    std::uint64_t seed = 0;
    std::string generator{kGeneratorId};

    std::span<const double> path(int p) const {
        return {values.data() + static_cast<std::size_t>(p) * (n_steps + 1),
                static_cast<std::size_t>(n_steps) + 1};
    }
    std::span<const double> path_variances(int p) const {
        return {variances.data() + static_cast<std::size_t>(p) * n_steps,
                static_cast<std::size_t>(n_steps)};
    }
};

/// Generates paths on the band's equal-upper-variance grid. Deterministic
/// given (band, scheme, n_paths, n_steps, seed); path p depends only on
/// (seed, p), so blocks reproduce the rows of the full ensemble bitwise.
PathEnsemble sample_paths(const MeasureBand& band, const MeasureScheme& scheme, int n_paths,
                          int n_steps, std::uint64_t seed);

/// Rows [first_path, first_path + count) of the ensemble sample_paths
/// would produce.
PathEnsemble sample_path_block(const MeasureBand& band, const MeasureScheme& scheme,
                               int first_path, int count, int n_steps, std::uint64_t seed);

/// Binomial increments are snapped to this dyadic grid so knot values stay
/// exactly representable and increments recovered from the stored path are
/// bit-identical to the generated ones; quadratic-variation containment
/// then holds with zero tolerance. Exact while |B| stays below 2^7.
inline double quantize_increment(double x) {
    return std::ldexp(std::nearbyint(std::ldexp(x, 46)), -46);
}

/// Cumulative sum of squared increments, one value per knot.
struct QVCurve {
    std::vector<double> values;
};

QVCurve realized_qv(const PathEnsemble& ensemble, int path_index);

/// Discrete stochastic integral sum_i h(t_i, B_i, aux_i) (B_{i+1} - B_i)
/// with the integrand evaluated at the left endpoint.
double stochastic_integral(const HedgeStrategy& strategy, const PathEnsemble& ensemble,
                           int path_index);

struct Estimate {
    double value = 0.0;
    double se = 0.0;
};

/// Monte Carlo estimate of E (B_t - B_s)^(2 order), order in {1, 2, 3};
/// s and t must be ensemble knots.
Estimate moment_estimate(const PathEnsemble& ensemble, int order, double s, double t);

/// Cumulative band curves accumulated the same way realized_qv accumulates
/// squared increments, so Binomial containment checks are exact in floating
/// point. Returns {lower_curve, upper_curve}, one value per knot.
std::pair<std::vector<double>, std::vector<double>>
qv_band_curves(std::span<const double> v_low, std::span<const double> v_high);

struct QvContainment {
    long paths_checked = 0;
    long knots_checked = 0;
    long violations = 0;
};

/// Exhaustive pathwise check that realized QV stays inside the band curves
/// at every knot (exact for Binomial ensembles).
QvContainment qv_containment(const MeasureBand& band, const PathEnsemble& ensemble);

// ---------------------------------------------------------------------------
// Quadratic-variation approximation error (coarse subdivisions vs fine QV).

struct QvApproxParams {
    int n_paths = 20000;
    int fine_steps = 1024;
    std::uint64_t seed = 1;
};

struct QvApproxSchemeEstimate {
    std::string scheme;
    double value = 0.0;
    double se = 0.0;
};

struct QvApproxResult {
    int subdivisions = 0;
    double bound = 0.0; // 4 * holder_c * (t/n)^alpha * upper(t)
    double max_value = 0.0;
    double max_se = 0.0;
    std::vector<QvApproxSchemeEstimate> per_scheme;
};

/// sup over a scheme battery of E (S_t^n - <B>_t)^2, where S_t^n sums
/// squared increments over the n-point uniform subdivision of [0, t] and
/// <B>_t is the fine-grid realized QV.
QvApproxResult qv_approx_error(const MeasureBand& band, double t, int subdivisions,
                               const QvApproxParams& params);

struct QvApproxSweep {
    std::vector<QvApproxResult> results;
    double fitted_slope = 0.0; // log-log slope of max_value vs subdivisions
};

/// Shares one set of fine-grid paths per scheme across all subdivision
/// counts; each count must divide fine_steps.
QvApproxSweep qv_approx_sweep(const MeasureBand& band, double t,
                              std::span<const int> subdivisions, const QvApproxParams& params);

// CSV round-trip for ensembles (header carries scheme, seed, generator).
void write_ensemble_csv(std::ostream& os, const PathEnsemble& ensemble);
PathEnsemble read_ensemble_csv(std::istream& is);

} // namespace uvband
