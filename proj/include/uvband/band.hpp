#pragma once

#include <string>
#include <utility>
#include <vector>

namespace uvband {

/// One knot of a piecewise-linear distribution function: value(t) in
/// variance units, nondecreasing in t.
struct Knot {
    double t;
    double value;
};

/// Pair of increasing distribution functions (lower, upper) bounding the
/// realized quadratic variation of the driving martingale on [0, T],
/// together with the Holder data of the upper function.
///
/// Both curves are piecewise linear between knots, start at (0, 0) and end
/// at t = T. Every admissible variance process must accumulate between the
/// two curves on every subinterval: lower increments never exceed upper
/// increments.
struct MeasureBand {
    double horizon = 0.0;
    std::vector<Knot> lower_knots;
    std::vector<Knot> upper_knots;
    double holder_c = 0.0;
    double holder_alpha = 1.0;

    double lower_total() const { return lower_knots.back().value; }
    double upper_total() const { return upper_knots.back().value; }

    /// Piecewise-linear interpolation of the lower / upper curve at t.
    double lower_at(double t) const;
    double upper_at(double t) const;

    /// Leftmost time at which the upper curve reaches `level`.
    double upper_inverse(double level) const;
};

struct BandValidation {
    std::vector<std::string> violations;
    bool ok() const { return violations.empty(); }
};

/// Constant-volatility band: lower(t) = sigma_low^2 t, upper(t) = sigma_high^2 t.
/// Throws ValidationError naming the violated constraint.
MeasureBand make_vol_band(double sigma_low, double sigma_high, double horizon);

/// Fully general band from knot tables; validates before returning.
MeasureBand make_knot_band(std::vector<Knot> lower, std::vector<Knot> upper,
                           double holder_c, double holder_alpha);

/// Lists every violated band invariant; empty report iff the band is valid.
BandValidation validate_band(const MeasureBand& band);

/// (lower increment, upper increment) over [s, t]; throws RangeError when
/// the times leave [0, horizon] or are out of order.
std::pair<double, double> band_increment(const MeasureBand& band, double s, double t);

} // namespace uvband
