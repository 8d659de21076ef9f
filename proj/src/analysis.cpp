#include "uvband/analysis.hpp"

#include "uvband/errors.hpp"

#include <algorithm>
#include <cmath>

namespace uvband {

namespace {

constexpr int kBlockPaths = 16384;

struct Welford {
    long n = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) {
        ++n;
        double delta = x - mean;
        mean += delta / static_cast<double>(n);
        m2 += delta * (x - mean);
    }
    double se() const {
        return n > 1 ? std::sqrt(m2 / (static_cast<double>(n) - 1.0) / static_cast<double>(n))
                     : 0.0;
    }
};

// Runs fn(ensemble) over the scheme's paths in blocks, bounding peak memory.
template <typename Fn>
void for_each_block(const MeasureBand& band, const MeasureScheme& scheme, int n_paths,
                    int n_steps, std::uint64_t seed, Fn&& fn) {
    for (int first = 0; first < n_paths; first += kBlockPaths) {
        int count = std::min(kBlockPaths, n_paths - first);
        PathEnsemble block = sample_path_block(band, scheme, first, count, n_steps, seed);
        fn(block);
    }
}

} // namespace

// ---------------------------------------------------------------------------
// Superhedge audit.

HedgeAuditor::HedgeAuditor(double initial_capital, const HedgeStrategy& strategy, Payoff payoff,
                           double epsilon)
    : strategy_(strategy), payoff_(std::move(payoff)) {
    if (epsilon < 0.0)
        throw ValidationError("hedge tolerance epsilon must be >= 0");
    report_.initial_capital = initial_capital;
    report_.epsilon = epsilon;
}

void HedgeAuditor::add(const PathEnsemble& ensemble) {
    if (ensemble.knots.size() != strategy_.spec.time_knots.size())
        throw AlignmentError("ensemble grid does not match the strategy grid");
    for (int p = 0; p < ensemble.n_paths; ++p) {
        double integral = stochastic_integral(strategy_, ensemble, p);
        double terminal = report_.initial_capital + integral;
        double f = evaluate_payoff(payoff_, ensemble.knots, ensemble.path(p));
        double shortfall = std::max(f - terminal, 0.0);
        report_.terminal_values.push_back(terminal);
        report_.shortfalls.push_back(shortfall);
        ++report_.paths;
        if (shortfall > report_.epsilon)
            ++report_.violations;
        report_.max_shortfall = std::max(report_.max_shortfall, shortfall);
        report_.mean_shortfall += shortfall;
    }
}

HedgeReport HedgeAuditor::finish() {
    if (report_.paths > 0) {
        report_.violation_rate =
            static_cast<double>(report_.violations) / static_cast<double>(report_.paths);
        report_.mean_shortfall /= static_cast<double>(report_.paths);
    }
    return std::move(report_);
}

HedgeReport verify_superhedge(double initial_capital, const HedgeStrategy& strategy,
                              std::span<const PathEnsemble> ensembles, const Payoff& payoff,
                              double epsilon) {
    HedgeAuditor auditor(initial_capital, strategy, payoff, epsilon);
    for (const PathEnsemble& e : ensembles)
        auditor.add(e);
    return auditor.finish();
}

double default_hedge_epsilon(const LatticeSpec& spec) {
    return 3.0 * spec.dx2;
}

// ---------------------------------------------------------------------------
// Dual bounds.

std::vector<SchemeEstimate> dual_bound(const Payoff& payoff, const MeasureBand& band,
                                       std::span<const MeasureScheme> battery, int n_paths,
                                       int n_steps, std::uint64_t seed) {
    if (battery.empty())
        throw ValidationError("dual_bound needs a nonempty scheme battery");
    if (n_paths < 2)
        throw ValidationError("dual_bound needs n_paths >= 2");
    validate_payoff(payoff, band.horizon);

    std::vector<SchemeEstimate> out;
    out.reserve(battery.size());
    for (std::size_t si = 0; si < battery.size(); ++si) {
        Welford acc;
        std::uint64_t scheme_seed = derive_seed(seed, si);
        for_each_block(band, battery[si], n_paths, n_steps, scheme_seed,
                       [&](const PathEnsemble& block) {
                           for (int p = 0; p < block.n_paths; ++p)
                               acc.add(evaluate_payoff(payoff, block.knots, block.path(p)));
                       });
        out.push_back({battery[si].name(), acc.mean, acc.se()});
    }
    return out;
}

DualityReport duality_gap(double primal, std::span<const SchemeEstimate> duals) {
    if (duals.empty())
        throw ValidationError("duality_gap needs at least one dual estimate");
    DualityReport report;
    report.primal = primal;
    report.duals.assign(duals.begin(), duals.end());
    const SchemeEstimate* best = &duals[0];
    for (const auto& d : duals)
        if (d.value > best->value)
            best = &d;
    report.best_scheme = best->scheme;
    report.best_dual = best->value;
    report.best_se = best->se;
    report.gap = primal - best->value;
    report.gap_relative = report.gap / std::max(std::fabs(primal), 1e-12);
    report.inconsistent = report.gap < -3.0 * best->se;
    return report;
}

// ---------------------------------------------------------------------------
// Capacity.

CapacityEstimate capacity(const Payoff& payoff, const MeasureBand& band,
                          std::span<const MeasureScheme> battery, int n_paths, int n_steps,
                          std::uint64_t seed) {
    if (battery.empty())
        throw ValidationError("capacity needs a nonempty scheme battery");
    CapacityEstimate est;
    for (std::size_t si = 0; si < battery.size(); ++si) {
        Welford acc;
        std::uint64_t scheme_seed = derive_seed(seed, si);
        for_each_block(band, battery[si], n_paths, n_steps, scheme_seed,
                       [&](const PathEnsemble& block) {
                           for (int p = 0; p < block.n_paths; ++p) {
                               double f =
                                   evaluate_payoff(payoff, block.knots, block.path(p));
                               acc.add(f * f);
                           }
                       });
        double norm = std::sqrt(std::max(acc.mean, 0.0));
        double se = norm > 0.0 ? acc.se() / (2.0 * norm) : std::sqrt(acc.se());
        est.per_scheme.push_back({battery[si].name(), norm, se});
        est.value = std::max(est.value, norm);
    }
    return est;
}

MarkovCheckReport markov_check(const Payoff& payoff, double alpha, const MeasureBand& band,
                               std::span<const MeasureScheme> battery, int n_paths, int n_steps,
                               std::uint64_t seed) {
    if (!(alpha > 0.0))
        throw ValidationError("markov_check threshold alpha must be positive");
    Payoff indicator = exceedance_indicator(payoff, alpha);
    CapacityEstimate event = capacity(indicator, band, battery, n_paths, n_steps, seed);
    CapacityEstimate base = capacity(payoff, band, battery, n_paths, n_steps, seed);

    MarkovCheckReport report;
    report.alpha = alpha;
    report.lhs = event.value;
    for (const auto& s : event.per_scheme)
        if (s.value == event.value)
            report.lhs_se = s.se;
    report.rhs = base.value / alpha;
    report.pass = report.lhs <= report.rhs + 3.0 * report.lhs_se;
    return report;
}

namespace {

std::optional<Payoff> payoff_union(const Payoff& a, const Payoff& b) {
    if (const auto* ta = std::get_if<TerminalPayoff>(&a)) {
        if (const auto* tb = std::get_if<TerminalPayoff>(&b))
            return Payoff{TerminalPayoff{Expr::max(ta->g, tb->g)}};
    }
    if (const auto* ra = std::get_if<RunningMaxPayoff>(&a)) {
        if (const auto* rb = std::get_if<RunningMaxPayoff>(&b))
            return Payoff{RunningMaxPayoff{Expr::max(ra->g, rb->g)}};
    }
    return std::nullopt;
}

} // namespace

CapacityAxiomReport capacity_axiom_check(const Payoff& a, const Payoff& b, bool nested,
                                         const MeasureBand& band,
                                         std::span<const MeasureScheme> battery, int n_paths,
                                         int n_steps, std::uint64_t seed) {
    std::optional<Payoff> u = payoff_union(a, b);
    if (!u)
        throw UnsupportedError(
            "capacity_axiom_check: union payoff requires both events to share kind "
            "(terminal or running-max)");

    CapacityAxiomReport report;
    report.nested = nested;
    // Common seed: the three estimates see identical paths per scheme.
    report.a = capacity(a, band, battery, n_paths, n_steps, seed);
    report.b = capacity(b, band, battery, n_paths, n_steps, seed);
    report.a_union_b = capacity(*u, band, battery, n_paths, n_steps, seed);

    double se_b = 0.0;
    for (const auto& s : report.b.per_scheme)
        se_b = std::max(se_b, s.se);
    report.monotonicity_pass = !nested || report.a.value <= report.b.value + 3.0 * se_b;

    double se_ab = 0.0;
    for (const auto& s : report.a.per_scheme)
        se_ab = std::max(se_ab, s.se);
    for (const auto& s : report.b.per_scheme)
        se_ab = std::max(se_ab, s.se);
    report.subadditivity_pass =
        report.a_union_b.value <= report.a.value + report.b.value + 3.0 * se_ab;
    return report;
}

} // namespace uvband
