#include "uvband/band.hpp"

#include "uvband/errors.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace uvband {

namespace {

// Relative slack for the knot-pair checks: increments are differences of
// user-supplied doubles, so exact comparisons would reject bands that are
// equalities in real arithmetic (e.g. the Holder bound of a vol band).
constexpr double kCheckSlack = 1e-12;

double interpolate(const std::vector<Knot>& knots, double t) {
    if (t <= knots.front().t)
        return knots.front().value;
    if (t >= knots.back().t)
        return knots.back().value;
    auto it = std::upper_bound(knots.begin(), knots.end(), t,
                               [](double x, const Knot& k) { return x < k.t; });
    const Knot& hi = *it;
    const Knot& lo = *(it - 1);
    double w = (t - lo.t) / (hi.t - lo.t);
    return lo.value + w * (hi.value - lo.value);
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

void check_knot_sequence(const std::vector<Knot>& knots, double horizon,
                         const char* name, std::vector<std::string>& out) {
    if (knots.size() < 2) {
        out.push_back(std::string(name) + ": needs at least two knots");
        return;
    }
    if (knots.front().t != 0.0 || knots.front().value != 0.0)
        out.push_back(std::string(name) + ": first knot must be (0, 0)");
    if (knots.back().t != horizon)
        out.push_back(std::string(name) + ": last knot time " + fmt(knots.back().t) +
                      " must equal the horizon " + fmt(horizon));
    for (std::size_t i = 1; i < knots.size(); ++i) {
        if (!(knots[i].t > knots[i - 1].t))
            out.push_back(std::string(name) + ": knot times must be strictly increasing (at t=" +
                          fmt(knots[i].t) + ")");
        if (knots[i].value < knots[i - 1].value)
            out.push_back(std::string(name) + ": monotonicity violated on [" +
                          fmt(knots[i - 1].t) + ", " + fmt(knots[i].t) + "]");
    }
}

} // namespace

double MeasureBand::lower_at(double t) const { return interpolate(lower_knots, t); }
double MeasureBand::upper_at(double t) const { return interpolate(upper_knots, t); }

double MeasureBand::upper_inverse(double level) const {
    if (level <= 0.0)
        return 0.0;
    if (level >= upper_total())
        return horizon;
    // Leftmost segment whose right endpoint reaches the level.
    for (std::size_t i = 1; i < upper_knots.size(); ++i) {
        const Knot& lo = upper_knots[i - 1];
        const Knot& hi = upper_knots[i];
        if (hi.value >= level) {
            if (hi.value == lo.value)
                return lo.t;
            double w = (level - lo.value) / (hi.value - lo.value);
            return lo.t + w * (hi.t - lo.t);
        }
    }
    return horizon;
}

MeasureBand make_vol_band(double sigma_low, double sigma_high, double horizon) {
    if (!(horizon > 0.0))
        throw ValidationError("horizon must be positive, got " + fmt(horizon));
    if (sigma_low < 0.0)
        throw ValidationError("sigma_low must be nonnegative, got " + fmt(sigma_low));
    if (!(sigma_high > 0.0))
        throw ValidationError("sigma_high must be positive, got " + fmt(sigma_high));
    if (sigma_low > sigma_high)
        throw ValidationError("sigma_low > sigma_high (" + fmt(sigma_low) + " > " +
                              fmt(sigma_high) + ")");
    MeasureBand band;
    band.horizon = horizon;
    band.lower_knots = {{0.0, 0.0}, {horizon, sigma_low * sigma_low * horizon}};
    band.upper_knots = {{0.0, 0.0}, {horizon, sigma_high * sigma_high * horizon}};
    band.holder_c = sigma_high * sigma_high;
    band.holder_alpha = 1.0;
    return band;
}

MeasureBand make_knot_band(std::vector<Knot> lower, std::vector<Knot> upper,
                           double holder_c, double holder_alpha) {
    MeasureBand band;
    band.lower_knots = std::move(lower);
    band.upper_knots = std::move(upper);
    band.horizon = band.upper_knots.empty() ? 0.0 : band.upper_knots.back().t;
    band.holder_c = holder_c;
    band.holder_alpha = holder_alpha;
    BandValidation report = validate_band(band);
    if (!report.ok()) {
        std::string msg = "invalid measure band:";
        for (const auto& v : report.violations)
            msg += "\n  - " + v;
        throw ValidationError(msg);
    }
    return band;
}

BandValidation validate_band(const MeasureBand& band) {
    BandValidation report;
    auto& out = report.violations;

    if (!(band.horizon > 0.0))
        out.push_back("horizon must be positive");
    check_knot_sequence(band.lower_knots, band.horizon, "lower_knots", out);
    check_knot_sequence(band.upper_knots, band.horizon, "upper_knots", out);
    if (!out.empty())
        return report; // interpolation below needs structurally sound knots

    if (!(band.upper_total() > 0.0))
        out.push_back("upper distribution must be nonzero: upper(T) = " +
                      fmt(band.upper_total()));
    if (!(band.holder_c > 0.0))
        out.push_back("holder_c must be positive");
    if (!(band.holder_alpha > 0.0 && band.holder_alpha <= 1.0))
        out.push_back("holder_alpha must lie in (0, 1]");

    // Merged knot grid.
    std::set<double> times;
    for (const Knot& k : band.lower_knots)
        times.insert(k.t);
    for (const Knot& k : band.upper_knots)
        times.insert(k.t);
    std::vector<double> grid(times.begin(), times.end());

    // Increment dominance on adjacent merged intervals (additivity extends
    // it to every subinterval).
    for (std::size_t i = 1; i < grid.size(); ++i) {
        double dl = band.lower_at(grid[i]) - band.lower_at(grid[i - 1]);
        double du = band.upper_at(grid[i]) - band.upper_at(grid[i - 1]);
        if (dl > du * (1.0 + kCheckSlack) + 1e-300)
            out.push_back("increment dominance violated on [" + fmt(grid[i - 1]) + ", " +
                          fmt(grid[i]) + "]: lower increment " + fmt(dl) +
                          " > upper increment " + fmt(du));
    }

    // Holder bound over every pair of upper knot times. Piecewise linearity
    // makes the knot-pair check a complete finite certificate.
    if (band.holder_c > 0.0 && band.holder_alpha > 0.0) {
        const auto& ks = band.upper_knots;
        for (std::size_t i = 0; i < ks.size(); ++i) {
            for (std::size_t j = i + 1; j < ks.size(); ++j) {
                double dv = ks[j].value - ks[i].value;
                double bound = band.holder_c * std::pow(ks[j].t - ks[i].t, band.holder_alpha);
                if (dv > bound * (1.0 + kCheckSlack) + 1e-300) {
                    out.push_back("holder bound violated on [" + fmt(ks[i].t) + ", " +
                                  fmt(ks[j].t) + "]: increment " + fmt(dv) + " > " +
                                  fmt(bound));
                }
            }
        }
    }
    return report;
}

std::pair<double, double> band_increment(const MeasureBand& band, double s, double t) {
    if (!(s >= 0.0) || !(t <= band.horizon) || !(s <= t))
        throw RangeError("band_increment requires 0 <= s <= t <= horizon, got s=" + fmt(s) +
                         ", t=" + fmt(t) + ", horizon=" + fmt(band.horizon));
    double dl = band.lower_at(t) - band.lower_at(s);
    double du = band.upper_at(t) - band.upper_at(s);
    return {dl, du};
}

} // namespace uvband
