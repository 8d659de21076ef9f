// Acceptance suite: one pass/fail line per criterion, exit code = number of
// failed criteria. Tolerances are pinned in code next to each check.

#include "oracles.hpp"
#include "uvband/analysis.hpp"
#include "uvband/runner.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

using namespace uvband;

namespace {

int failures = 0;

void line(int id, const std::string& name, bool pass, const std::string& detail) {
    std::printf("[%s] %02d %s: %s\n", pass ? "PASS" : "FAIL", id, name.c_str(),
                detail.c_str());
    std::fflush(stdout);
    if (!pass)
        ++failures;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

double rel_err(double value, double target) {
    return std::fabs(value - target) / std::max(std::fabs(target), 1e-300);
}

Payoff terminal(const char* expr) { return Payoff{TerminalPayoff{Expr::parse(expr)}}; }

struct SuiteEntry {
    std::string name;
    Payoff payoff;
    int n_steps;
};

std::vector<SuiteEntry> payoff_suite() {
    return {
        {"x^2", terminal("x^2"), 400},
        {"call", terminal("max(x, 0)"), 400},
        {"-|x|", terminal("0 - abs(x)"), 400},
        {"lookback", Payoff{RunningMaxPayoff{Expr::parse("x")}}, 400},
        {"integral", Payoff{TimeIntegralPayoff{Expr::parse("x"), Expr::parse("x1")}}, 200},
        {"fwd-var", Payoff{CylindricalPayoff{{0.5, 1.0}, Expr::parse("(x2 - x1)^2")}}, 200},
        {"butterfly", terminal("max(x + 0.1, 0) - 2*max(x, 0) + max(x - 0.1, 0)"), 200},
    };
}

MeasureBand default_band() { return make_vol_band(0.1, 0.2, 1.0); }

std::vector<MeasureScheme> battery_plus_policy(IncrementLaw law, const PricingResult& priced,
                                               const LatticeSpec& spec) {
    auto battery = default_battery(law);
    battery.push_back({PolicyFeedbackScheme{priced.policy, spec}, law});
    return battery;
}

// ---------------------------------------------------------------------------

void criterion_1() {
    LatticeSpec spec = build_lattice(default_band(), 400);
    double up = price_upper(spec, terminal("x^2")).price;
    double lo = price_lower(spec, terminal("x^2")).price;
    bool pass = rel_err(up, 0.04) <= 1e-12 && rel_err(lo, 0.01) <= 1e-12;
    line(1, "second-moment identity", pass,
         "upper=" + fmt(up) + " (rel " + fmt(rel_err(up, 0.04)) + " <= 1e-12), lower=" +
             fmt(lo) + " (rel " + fmt(rel_err(lo, 0.01)) + " <= 1e-12)");
}

void criterion_2() {
    LatticeSpec spec = build_lattice(default_band(), 400);
    double call = price_upper(spec, terminal("max(x, 0)")).price;
    double call_target = oracles::gaussian_call(0.04);
    double neg = price_upper(spec, terminal("0 - abs(x)")).price;
    double neg_target = -oracles::gaussian_abs(0.01);
    bool pass = rel_err(call, call_target) <= 0.005 && rel_err(neg, neg_target) <= 0.005;
    line(2, "convex/concave closed forms", pass,
         "call=" + fmt(call) + " vs " + fmt(call_target) + " (rel " +
             fmt(rel_err(call, call_target)) + "), -|x|=" + fmt(neg) + " vs " +
             fmt(neg_target) + " (rel " + fmt(rel_err(neg, neg_target)) + "), tol 0.5%");
}

void criterion_3() {
    LatticeSpec spec = build_lattice(default_band(), 400);
    double price = price_upper(spec, Payoff{RunningMaxPayoff{Expr::parse("x")}}).price;
    double target = oracles::brownian_sup_mean(0.04);
    bool pass = rel_err(price, target) <= 0.02;
    line(3, "running-max closed form", pass,
         "price=" + fmt(price) + " vs " + fmt(target) + " (rel " +
             fmt(rel_err(price, target)) + " <= 2%)");
}

void criterion_4() {
    LatticeSpec spec = build_lattice(default_band(), 200);
    Payoff claim{TimeIntegralPayoff{Expr::parse("x"), Expr::parse("x1")}};
    auto up = price_upper(spec, claim);
    auto lo = price_lower(spec, claim);
    HedgeStrategy h = extract_delta(*up.surface);
    double max_dev = 0.0;
    for (int i = 0; i < spec.n_steps; ++i) {
        double t = spec.time_knots[static_cast<std::size_t>(i)];
        max_dev = std::max(max_dev, std::fabs(h.lookup(t, 0.0, 0.0) - (1.0 - t)));
    }
    bool pass = std::fabs(up.price) <= 1e-3 && std::fabs(lo.price) <= 1e-3 &&
                max_dev <= 2.0 * spec.dx;
    line(4, "replicable time integral", pass,
         "upper=" + fmt(up.price) + ", lower=" + fmt(lo.price) +
             " (|.| <= 1e-3), max |delta-(T-t)|=" + fmt(max_dev) + " <= " +
             fmt(2.0 * spec.dx));
}

void criterion_5() {
    LatticeSpec spec = build_lattice(default_band(), 200);
    Payoff claim{CylindricalPayoff{{0.5, 1.0}, Expr::parse("(x2 - x1)^2")}};
    double price = price_upper(spec, claim).price;
    bool pass = rel_err(price, 0.02) <= 1e-10;
    line(5, "forward-variance fixing claim", pass,
         "price=" + fmt(price) + " vs 0.02 (rel " + fmt(rel_err(price, 0.02)) +
             " <= 1e-10)");
}

void criterion_6() {
    // Every dual estimate <= primal + 3 SE + 0.5% truncation allowance,
    // zero violations over 10 seeds. 10000 paths per scheme keep the run
    // within the time budget; the inequality slack scales accordingly.
    MeasureBand band = default_band();
    const int n_paths = 10000;
    long checks = 0, violations = 0;
    std::string worst;
    double worst_excess = -1e9;
    for (const SuiteEntry& entry : payoff_suite()) {
        LatticeSpec spec = build_lattice(band, entry.n_steps);
        PricingResult priced = price_upper(spec, entry.payoff);
        priced.surface.reset();
        auto battery = battery_plus_policy(IncrementLaw::Gaussian, priced, spec);
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            auto duals = dual_bound(entry.payoff, band, battery, n_paths, entry.n_steps, seed);
            for (const auto& d : duals) {
                double slack = 3.0 * d.se + 0.005 * std::fabs(priced.price);
                double excess = d.value - priced.price - slack;
                ++checks;
                if (excess > 0.0)
                    ++violations;
                if (excess > worst_excess) {
                    worst_excess = excess;
                    worst = entry.name + "/" + d.scheme + "/seed" + std::to_string(seed);
                }
            }
        }
    }
    line(6, "weak duality across the battery", violations == 0,
         std::to_string(violations) + " violations in " + std::to_string(checks) +
             " checks (worst margin " + fmt(worst_excess) + " at " + worst + ")");
}

void criterion_7() {
    MeasureBand band = default_band();
    Payoff butterfly = terminal("max(x + 0.1, 0) - 2*max(x, 0) + max(x - 0.1, 0)");
    const int n_paths = 100000;

    auto gap_at = [&](int n_steps) {
        LatticeSpec spec = build_lattice(band, n_steps);
        PricingResult priced = price_upper(spec, butterfly);
        priced.surface.reset();
        auto battery = battery_plus_policy(IncrementLaw::Binomial, priced, spec);
        auto duals = dual_bound(butterfly, band, battery, n_paths, n_steps, 1);
        return duality_gap(priced.price, duals);
    };
    DualityReport at200 = gap_at(200);
    DualityReport at400 = gap_at(400);
    bool pass = !at200.inconsistent && at200.gap_relative <= 0.015 &&
                at400.gap < at200.gap;
    line(7, "strong-duality gap via policy feedback", pass,
         "gap_rel(200)=" + fmt(at200.gap_relative) + " <= 1.5%, gap(200)=" +
             fmt(at200.gap) + " > gap(400)=" + fmt(at400.gap) + " (best scheme " +
             at200.best_scheme + ")");
}

void criterion_8() {
    // Funded superhedge: violation rate 0 at eps = 3 dx^2 over the binomial
    // battery; 10% underfunding must be visible on at least one scheme.
    MeasureBand band = default_band();
    const int n_paths = 20000;
    bool funded_pass = true;
    std::string funded_detail;
    for (const SuiteEntry& entry : payoff_suite()) {
        LatticeSpec spec = build_lattice(band, entry.n_steps);
        PricingResult priced = price_upper(spec, entry.payoff);
        HedgeStrategy strategy = extract_delta(*priced.surface);
        priced.surface.reset();
        double eps = default_hedge_epsilon(spec);
        auto battery = battery_plus_policy(IncrementLaw::Binomial, priced, spec);

        double rate = 0.0, max_short = 0.0;
        std::string worst_scheme = "-";
        for (std::size_t si = 0; si < battery.size(); ++si) {
            HedgeAuditor auditor(priced.price, strategy, entry.payoff, eps);
            std::uint64_t scheme_seed = derive_seed(11, si);
            for (int first = 0; first < n_paths; first += 10000) {
                int count = std::min(10000, n_paths - first);
                auditor.add(sample_path_block(band, battery[si], first, count, entry.n_steps,
                                              scheme_seed));
            }
            HedgeReport r = auditor.finish();
            if (r.violation_rate > rate) {
                rate = r.violation_rate;
                worst_scheme = battery[si].name();
            }
            max_short = std::max(max_short, r.max_shortfall);
        }
        if (rate > 0.0) {
            funded_pass = false;
            funded_detail += entry.name + ": rate=" + fmt(rate) + " on " + worst_scheme +
                             " (max shortfall " + fmt(max_short) + " vs eps " + fmt(eps) +
                             "); ";
        }
    }
    if (funded_pass)
        funded_detail = "violation rate 0 at eps = 3 dx^2 for all 7 payoffs; ";

    // Underfunding by 10%: the call against the upper band endpoint.
    LatticeSpec spec = build_lattice(band, 400);
    Payoff call = terminal("max(x, 0)");
    PricingResult priced = price_upper(spec, call);
    HedgeStrategy strategy = extract_delta(*priced.surface);
    priced.surface.reset();
    HedgeAuditor auditor(0.9 * priced.price, strategy, call, default_hedge_epsilon(spec));
    auditor.add(sample_paths(band, {BandEdgeScheme{true}, IncrementLaw::Binomial}, 20000, 400,
                             12));
    HedgeReport under = auditor.finish();
    bool under_pass = under.violation_rate > 0.05;
    line(8, "quasi-sure superhedge", funded_pass && under_pass,
         funded_detail + "underfunded rate=" + fmt(under.violation_rate) + " > 0.05");
}

void criterion_9() {
    MeasureBand band = default_band();
    long paths = 0, violations = 0;
    auto battery = default_battery(IncrementLaw::Binomial);
    for (std::size_t si = 0; si < battery.size(); ++si) {
        const MeasureScheme& scheme = battery[si];
        std::uint64_t scheme_seed = derive_seed(13, si);
        for (int first = 0; first < 100000; first += 20000) {
            PathEnsemble block = sample_path_block(band, scheme, first, 20000, 400, scheme_seed);
            QvContainment c = qv_containment(band, block);
            paths += c.paths_checked;
            violations += c.violations;
        }
    }
    line(9, "pathwise bracket sandwich", violations == 0,
         std::to_string(violations) + " violations over " + std::to_string(paths) +
             " paths x 400 steps (exact comparison)");
}

void criterion_10() {
    MeasureBand band = default_band();
    QvApproxParams params;
    params.n_paths = 20000;
    params.fine_steps = 1024;
    params.seed = 5;
    std::vector<int> ns = {4, 8, 16, 32, 64};
    QvApproxSweep sweep = qv_approx_sweep(band, 1.0, ns, params);
    bool bound_ok = true;
    for (const auto& r : sweep.results)
        bound_ok = bound_ok && r.max_value <= r.bound + 3.0 * r.max_se;
    double slope_err = std::fabs(sweep.fitted_slope + 1.0);
    bool pass = bound_ok && slope_err <= 0.2;
    line(10, "qv approximation rate", pass,
         std::string(bound_ok ? "all bounds hold" : "bound violated") + ", slope=" +
             fmt(sweep.fitted_slope) + " (|slope+1|=" + fmt(slope_err) + " <= 0.2)");
}

void criterion_11() {
    MeasureBand band = default_band();
    PathEnsemble ens =
        sample_paths(band, {ConstVolScheme{0.2}, IncrementLaw::Gaussian}, 100000, 400, 19);
    bool pass = true;
    std::string detail;
    for (int order : {1, 2}) {
        double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
        int count = 0;
        for (double len : {0.25, 0.5, 1.0}) {
            Estimate e = moment_estimate(ens, order, 0.0, len);
            double x = std::log(0.04 * len);
            double y = std::log(e.value);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            ++count;
        }
        double slope = (count * sxy - sx * sy) / (count * sxx - sx * sx);
        pass = pass && std::fabs(slope - order) <= 0.15;
        detail += "order " + std::to_string(order) + ": slope=" + fmt(slope) + " ";
    }
    line(11, "moment scaling exponents", pass, detail + "(tol 0.15)");
}

void criterion_12() {
    MeasureBand band = default_band();
    auto battery = default_battery(IncrementLaw::Gaussian);
    const int paths = 5000, steps = 64;

    bool unit_ok = true, homog_ok = true, mono_ok = true, subadd_ok = true, markov_ok = true;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        CapacityEstimate one = capacity(terminal("1"), band, battery, paths, steps, seed);
        unit_ok = unit_ok && one.value == 1.0;

        CapacityEstimate base = capacity(terminal("x"), band, battery, paths, steps, seed);
        CapacityEstimate twice = capacity(terminal("2 * x"), band, battery, paths, steps, seed);
        homog_ok = homog_ok && twice.value == 2.0 * base.value;

        CapacityAxiomReport nested = capacity_axiom_check(
            terminal("clamp((x - 0.1) * 1e13, 0, 1)"),
            terminal("clamp((x - 0.05) * 1e13, 0, 1)"), true, band, battery, paths, steps,
            seed);
        mono_ok = mono_ok && nested.monotonicity_pass;
        subadd_ok = subadd_ok && nested.subadditivity_pass;

        CapacityAxiomReport disjoint = capacity_axiom_check(
            terminal("clamp((x - 0.1) * 1e13, 0, 1)"),
            terminal("clamp((0 - x - 0.1) * 1e13, 0, 1)"), false, band, battery, paths, steps,
            seed);
        subadd_ok = subadd_ok && disjoint.subadditivity_pass;

        for (double alpha : {0.1, 0.2}) {
            MarkovCheckReport mk =
                markov_check(terminal("x"), alpha, band, battery, paths, steps, seed);
            markov_ok = markov_ok && mk.pass;
        }
    }
    bool pass = unit_ok && homog_ok && mono_ok && subadd_ok && markov_ok;
    std::ostringstream detail;
    detail << "c(1)=1 " << (unit_ok ? "exact" : "VIOLATED") << ", homogeneity "
           << (homog_ok ? "exact" : "VIOLATED") << ", monotonicity "
           << (mono_ok ? "ok" : "VIOLATED") << ", subadditivity "
           << (subadd_ok ? "ok" : "VIOLATED") << ", markov "
           << (markov_ok ? "ok" : "VIOLATED") << " over 10 seeds";
    line(12, "capacity axioms", pass, detail.str());
}

void criterion_13() {
    const char* config_text = R"(
[band]
kind = vol
sigma_low = 0.1
sigma_high = 0.2
horizon = 1.0

[payoff]
kind = terminal
expr = max(x, 0)

[price]
n_steps = 100

[duality]
n_steps = 50
n_paths = 20000
seed = 7
)";
    ConfigFile config = ConfigFile::parse_text(config_text);
    bool pass = true;
    std::string detail;
    for (const std::string sub : {"price", "duality"}) {
        std::string a = to_canonical_json(run_subcommand(sub, config).report);
        std::string b = to_canonical_json(run_subcommand(sub, config).report);
        pass = pass && a == b && !a.empty();
        detail += sub + (a == b ? " byte-identical, " : " DIFFERS, ");
    }
    line(13, "deterministic reports", pass, detail + "seeds pinned, no timestamps");
}

} // namespace

int main() {
    std::printf("uvband acceptance suite (band sigma in [0.1, 0.2], horizon 1)\n");
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    criterion_10();
    criterion_11();
    criterion_12();
    criterion_13();
    std::printf("%d of 13 criteria failed\n", failures);
    return failures;
}
