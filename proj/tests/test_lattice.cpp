#include "doctest.h"

#include "oracles.hpp"
#include "uvband/errors.hpp"
#include "uvband/lattice.hpp"
#include "uvband/rng.hpp"

#include <cmath>
#include <sstream>
#include <vector>

using namespace uvband;

namespace {

MeasureBand default_band() { return make_vol_band(0.1, 0.2, 1.0); }

Payoff terminal(const char* expr) { return Payoff{TerminalPayoff{Expr::parse(expr)}}; }

double rel_err(double value, double target) {
    return std::fabs(value - target) / std::max(std::fabs(target), 1e-300);
}

} // namespace

TEST_CASE("build_lattice on the vol band") {
    LatticeSpec spec = build_lattice(default_band(), 4);
    CHECK(spec.time_knots.size() == 5);
    for (int i = 0; i < 4; ++i) {
        CHECK(spec.v_high[i] == doctest::Approx(0.01).epsilon(1e-13));
        CHECK(spec.v_low[i] == doctest::Approx(0.0025).epsilon(1e-13));
        CHECK(spec.time_knots[i + 1] == doctest::Approx(0.25 * (i + 1)).epsilon(1e-13));
    }
    CHECK(spec.dx == doctest::Approx(0.1).epsilon(1e-13));

    double sum_hi = 0.0, sum_lo = 0.0;
    for (int i = 0; i < 4; ++i) {
        sum_hi += spec.v_high[i];
        sum_lo += spec.v_low[i];
    }
    CHECK(sum_hi == doctest::Approx(0.04).epsilon(1e-12));
    CHECK(sum_lo == doctest::Approx(0.01).epsilon(1e-12));

    LatticeSpec one = build_lattice(make_vol_band(0.2, 0.2, 1.0), 1);
    CHECK(one.v_low[0] == doctest::Approx(0.04).epsilon(1e-14));
    CHECK(one.v_high[0] == doctest::Approx(0.04).epsilon(1e-14));
    CHECK(one.dx == doctest::Approx(0.2).epsilon(1e-14));

    CHECK_THROWS_AS(build_lattice(default_band(), 0), ValidationError);
}

TEST_CASE("build_lattice inverts a non-Lebesgue upper curve") {
    // Upper curve 0.04 sqrt(t) sampled at quadratic knots; equal-variance
    // inversion must land at t with sqrt(t) in {1/4, 1/2, 3/4, 1}.
    std::vector<Knot> upper;
    for (int k = 0; k <= 8; ++k) {
        double t = k * k / 64.0;
        upper.push_back({t, 0.04 * std::sqrt(t)});
    }
    MeasureBand band = make_knot_band({{0.0, 0.0}, {1.0, 0.0}}, upper, 0.04, 0.5);
    LatticeSpec spec = build_lattice(band, 4);
    CHECK(spec.time_knots[1] == doctest::Approx(1.0 / 16).epsilon(1e-12));
    CHECK(spec.time_knots[2] == doctest::Approx(1.0 / 4).epsilon(1e-12));
    CHECK(spec.time_knots[3] == doctest::Approx(9.0 / 16).epsilon(1e-12));
    CHECK(spec.time_knots[4] == 1.0);
    for (int i = 0; i < 4; ++i)
        CHECK(spec.v_high[i] == doctest::Approx(0.01).epsilon(1e-12));
}

TEST_CASE("second moment telescopes to the band totals") {
    for (int n : {1, 7, 100, 400}) {
        LatticeSpec spec = build_lattice(default_band(), n);
        double up = price_upper(spec, terminal("x^2")).price;
        double lo = price_lower(spec, terminal("x^2")).price;
        CHECK(rel_err(up, 0.04) <= 1e-12);
        CHECK(rel_err(lo, 0.01) <= 1e-12);
    }
}

TEST_CASE("constant and linear claims price exactly") {
    LatticeSpec spec = build_lattice(default_band(), 50);
    CHECK(price_upper(spec, terminal("5")).price == 5.0);
    CHECK(price_lower(spec, terminal("5")).price == 5.0);
    CHECK(std::fabs(price_upper(spec, terminal("x")).price) <= 1e-15);
    CHECK(std::fabs(price_lower(spec, terminal("x")).price) <= 1e-15);
}

TEST_CASE("convex and concave claims hit the Bachelier closed forms") {
    LatticeSpec spec = build_lattice(default_band(), 400);

    auto call = price_upper(spec, terminal("max(x, 0)"));
    CHECK(rel_err(call.price, oracles::gaussian_call(0.04)) <= 0.005);
    CHECK(call.policy->fraction_high() == 1.0); // convex => all high

    auto neg_abs = price_upper(spec, terminal("0 - abs(x)"));
    CHECK(rel_err(neg_abs.price, -oracles::gaussian_abs(0.01)) <= 0.005);
    // Concavity concentrates at the kink: the center column picks the
    // lower endpoint at every step (flat tails are ties).
    for (int i = 0; i < spec.n_steps; ++i)
        CHECK(!neg_abs.policy->is_high(i, 0));
}

TEST_CASE("running max prices the continuous supremum as monitored: oracle sandwich") {
    MeasureBand band = default_band();
    Payoff lookback{RunningMaxPayoff{Expr::parse("x")}};

    // Grid-maximum semantics (correction off) against the Spitzer oracle:
    // the worst case is the upper band endpoint, a +-dx walk, whose
    // discrete maximum has an exact closed form.
    LatticeOptions raw;
    raw.sup_correction = 0.0;
    LatticeSpec spec_raw = build_lattice(band, 400, raw);
    double grid_max_price = price_upper(spec_raw, lookback).price;
    double spitzer = oracles::discrete_max_mean_binomial(400, spec_raw.dx);
    CHECK(grid_max_price >= spitzer - 1e-10);
    CHECK(grid_max_price <= oracles::brownian_sup_mean(0.04) + 1e-10);
    // All-high is the optimal policy for the identity lookback, so the
    // lattice value matches the closed form of the constant-high walk.
    CHECK(rel_err(grid_max_price, spitzer) <= 2e-3);

    // Monitored-sup semantics (default): within 2% of the reflection value.
    LatticeSpec spec = build_lattice(band, 400);
    double price = price_upper(spec, lookback).price;
    CHECK(rel_err(price, oracles::brownian_sup_mean(0.04)) <= 0.02);
    // The correction is a pure shift for the identity claim.
    CHECK(price == doctest::Approx(grid_max_price + kSupMonitoringCorrection * spec.dx)
                       .epsilon(1e-9));
}

TEST_CASE("replicable time integral prices to zero with delta close to remaining time") {
    LatticeSpec spec = build_lattice(default_band(), 200);
    Payoff claim{TimeIntegralPayoff{Expr::parse("x"), Expr::parse("x")}};

    auto up = price_upper(spec, claim);
    auto lo = price_lower(spec, claim);
    CHECK(std::fabs(up.price) <= 1e-3);
    CHECK(std::fabs(lo.price) <= 1e-3);

    HedgeStrategy h = extract_delta(*up.surface);
    for (int i : {0, 50, 100, 199}) {
        double t = spec.time_knots[i];
        for (double x : {-0.5, 0.0, 0.7}) {
            for (double y : {-0.2, 0.0, 0.3}) {
                double delta = h.lookup(t, x, y);
                CHECK(std::fabs(delta - (1.0 - t)) <= 1.5 * spec.dx);
            }
        }
    }
}

TEST_CASE("two-date cylindrical variance claim equals the band increment") {
    LatticeSpec spec = build_lattice(default_band(), 200);
    Payoff claim{CylindricalPayoff{{0.5, 1.0}, Expr::parse("(x2 - x1)^2")}};
    double up = price_upper(spec, claim).price;
    double lo = price_lower(spec, claim).price;
    CHECK(rel_err(up, 0.02) <= 1e-10);
    CHECK(rel_err(lo, 0.005) <= 1e-10);
}

TEST_CASE("single-date cylindrical claim prices at its own horizon") {
    LatticeSpec spec = build_lattice(default_band(), 100);
    Payoff claim{CylindricalPayoff{{0.5}, Expr::parse("x1^2")}};
    CHECK(rel_err(price_upper(spec, claim).price, 0.02) <= 1e-12);
    CHECK(rel_err(price_lower(spec, claim).price, 0.005) <= 1e-12);
}

TEST_CASE("cylindrical alignment and dimension errors") {
    LatticeSpec spec = build_lattice(default_band(), 3);
    Payoff misaligned{CylindricalPayoff{{0.4, 1.0}, Expr::parse("x2 - x1")}};
    CHECK_THROWS_AS(price_upper(spec, misaligned), AlignmentError);
    Payoff wide{CylindricalPayoff{{0.25, 0.5, 1.0}, Expr::parse("x3 - x1")}};
    LatticeSpec spec4 = build_lattice(default_band(), 4);
    CHECK_THROWS_AS(price_upper(spec4, wide), UnsupportedError);
}

TEST_CASE("degenerate band collapses upper and lower prices") {
    LatticeSpec spec = build_lattice(make_vol_band(0.2, 0.2, 1.0), 64);
    std::vector<Payoff> suite = {
        terminal("x^2"),
        terminal("max(x, 0)"),
        Payoff{RunningMaxPayoff{Expr::parse("x")}},
        Payoff{TimeIntegralPayoff{Expr::parse("x"), Expr::parse("x1")}},
        Payoff{CylindricalPayoff{{0.5, 1.0}, Expr::parse("(x2 - x1)^2")}},
    };
    for (const auto& payoff : suite) {
        double up = price_upper(spec, payoff).price;
        double lo = price_lower(spec, payoff).price;
        CHECK(up == doctest::Approx(lo).epsilon(1e-14));
    }
}

TEST_CASE("hedge ratios of linear and constant claims") {
    LatticeSpec spec = build_lattice(default_band(), 40);

    auto linear = price_upper(spec, terminal("2*x + 3"));
    HedgeStrategy h = extract_delta(*linear.surface);
    for (int i = 0; i < spec.n_steps; ++i)
        for (int j = -i; j <= i; ++j)
            CHECK(h.at(i, j) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(h.lookup(0.5, 0.123) == doctest::Approx(2.0).epsilon(1e-12));

    auto constant = price_upper(spec, terminal("7"));
    HedgeStrategy hc = extract_delta(*constant.surface);
    for (int i = 0; i < spec.n_steps; ++i)
        for (int j = -i; j <= i; ++j)
            CHECK(hc.at(i, j) == 0.0);
}

TEST_CASE("sublinearity and positive homogeneity") {
    LatticeSpec spec = build_lattice(default_band(), 60);
    Payoff f = terminal("max(x, 0)");
    Payoff g = terminal("abs(x) - x^2");
    Payoff fg = terminal("max(x, 0) + abs(x) - x^2");

    double pf = price_upper(spec, f).price;
    double pg = price_upper(spec, g).price;
    double pfg = price_upper(spec, fg).price;
    CHECK(pfg <= pf + pg + 1e-12);

    // lambda = 2 scales every floating-point operation exactly.
    Payoff f2 = terminal("2 * max(x, 0)");
    CHECK(price_upper(spec, f2).price == 2.0 * pf);
    // General lambda matches to rounding.
    Payoff f17 = terminal("1.7 * max(x, 0)");
    CHECK(price_upper(spec, f17).price == doctest::Approx(1.7 * pf).epsilon(1e-13));

    // price_upper(f) + price_upper(-f) >= 0.
    Payoff neg = terminal("0 - max(x, 0)");
    CHECK(pf + price_upper(spec, neg).price >= -1e-15);

    // Monotonicity: max(x,0) <= abs(x) nodewise.
    double pabs = price_upper(spec, terminal("abs(x)")).price;
    CHECK(pf <= pabs + 1e-15);
}

TEST_CASE("weak duality between the lattice bounds") {
    LatticeSpec spec = build_lattice(default_band(), 80);
    std::vector<Payoff> suite = {
        terminal("x^2"),
        terminal("max(x + 0.1, 0) - 2*max(x, 0) + max(x - 0.1, 0)"),
        Payoff{RunningMaxPayoff{Expr::parse("min(x, 0.5)")}},
        Payoff{TimeIntegralPayoff{Expr::parse("x^2"), Expr::parse("x1")}},
    };
    for (const auto& payoff : suite)
        CHECK(price_lower(spec, payoff).price <= price_upper(spec, payoff).price + 1e-12);
}

TEST_CASE("recorded policy reproduces the surface and matches curvature") {
    LatticeSpec spec = build_lattice(default_band(), 30);
    Payoff butterfly = terminal("max(x + 0.1, 0) - 2*max(x, 0) + max(x - 0.1, 0)");
    auto res = price_upper(spec, butterfly);
    const ValueSurface& s = *res.surface;
    const Policy& pol = *res.policy;

    bool sometimes_low = false;
    for (int i = 0; i < spec.n_steps; ++i) {
        for (int j = -i; j <= i; ++j) {
            double vu = s.at(i + 1, j + 1);
            double vm = s.at(i + 1, j);
            double vd = s.at(i + 1, j - 1);
            double d2 = (vu - vm) + (vd - vm);
            double tie = policy_tie_tolerance(vu, vm, vd);
            bool high = pol.is_high(i, j);
            CHECK(high == (std::fabs(d2) <= tie || d2 > 0.0));
            sometimes_low = sometimes_low || !high;
            double v = high ? spec.v_high[i] : spec.v_low[i];
            double recomputed = vm + v / (2.0 * spec.dx2) * d2;
            CHECK(s.at(i, j) == doctest::Approx(recomputed).epsilon(1e-12));
            // DP consistency: interior values stay inside the successor hull.
            double lo = std::min(std::min(vu, vm), vd);
            double hi = std::max(std::max(vu, vm), vd);
            CHECK(s.at(i, j) >= lo - 1e-14);
            CHECK(s.at(i, j) <= hi + 1e-14);
        }
    }
    CHECK(sometimes_low); // the butterfly mixes both endpoints
}

TEST_CASE("randomized claims keep the price functional sublinear and monotone") {
    // Hand-rolled generator: random vol bands and random piecewise
    // expressions built from the grammar's atoms.
    uvband::Rng rng(2024, 0);
    auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * rng.next_unit(); };
    auto random_claim = [&]() {
        std::ostringstream os;
        os.precision(6);
        int atoms = 1 + static_cast<int>(rng.next_unit() * 3);
        for (int a = 0; a < atoms; ++a) {
            double coeff = uniform(-2.0, 2.0);
            double shift = uniform(-0.3, 0.3);
            // Unary minus is expression-head only, so fold the shift's sign
            // into the operator.
            std::string shifted = (shift >= 0 ? "x - " : "x + ") + std::to_string(
                std::fabs(shift));
            os << (a ? " + " : "") << "(" << coeff << ") * ";
            switch (static_cast<int>(rng.next_unit() * 4)) {
            case 0:
                os << "max(" << shifted << ", 0)";
                break;
            case 1:
                os << "abs(" << shifted << ")";
                break;
            case 2:
                os << "min(x, " << shift << ")";
                break;
            default:
                os << "x^2";
                break;
            }
        }
        return os.str();
    };

    for (int trial = 0; trial < 20; ++trial) {
        double sigma_low = uniform(0.02, 0.2);
        double sigma_high = sigma_low + uniform(0.05, 0.25);
        MeasureBand band = make_vol_band(sigma_low, sigma_high, uniform(0.5, 1.5));
        LatticeSpec spec = build_lattice(band, 24);

        std::string fs = random_claim();
        std::string gs = random_claim();
        CAPTURE(trial);
        CAPTURE(fs);
        CAPTURE(gs);

        double up_f = price_upper(spec, terminal(fs.c_str())).price;
        double lo_f = price_lower(spec, terminal(fs.c_str())).price;
        double up_g = price_upper(spec, terminal(gs.c_str())).price;
        double up_fg = price_upper(spec, terminal((fs + " + " + gs).c_str())).price;
        double up_2f = price_upper(spec, terminal(("2 * (" + fs + ")").c_str())).price;
        double up_neg = price_upper(spec, terminal(("0 - (" + fs + ")").c_str())).price;
        double up_dom =
            price_upper(spec, terminal((fs + " + max(" + gs + ", 0)").c_str())).price;

        double scale = std::max({1.0, std::fabs(up_f), std::fabs(up_g)});
        CHECK(lo_f <= up_f + 1e-12 * scale);
        CHECK(up_fg <= up_f + up_g + 1e-12 * scale);
        CHECK(up_2f == 2.0 * up_f);
        CHECK(up_f + up_neg >= -1e-12 * scale);
        CHECK(up_f <= up_dom + 1e-12 * scale);
    }
}

TEST_CASE("convergence sweep") {
    MeasureBand band = default_band();
    std::vector<int> steps = {50, 100, 200, 400};

    auto call = convergence_sweep(band, terminal("max(x, 0)"), steps);
    double target = oracles::gaussian_call(0.04);
    double prev = std::fabs(call.points[0].price - target);
    for (std::size_t i = 1; i < call.points.size(); ++i) {
        double err = std::fabs(call.points[i].price - target);
        CHECK(err <= prev + 1e-12);
        prev = err;
    }
    CHECK(rel_err(call.points.back().price, target) < 0.005);

    auto flat = convergence_sweep(band, terminal("3"), steps);
    for (const auto& p : flat.points)
        CHECK(p.price == 3.0);
    CHECK(flat.exact);

    auto quad = convergence_sweep(band, terminal("x^2"), steps);
    for (const auto& p : quad.points)
        CHECK(rel_err(p.price, 0.04) <= 1e-12);
    CHECK(quad.exact);

    std::vector<int> bad = {100, 50};
    CHECK_THROWS_AS(convergence_sweep(band, terminal("x"), bad), ValidationError);
}
